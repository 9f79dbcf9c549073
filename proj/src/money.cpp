#include "dsagent/money.hpp"

#include <cctype>
#include <limits>

#include "dsagent/errors.hpp"

namespace dsagent {

Money Money::parse(std::string_view text) {
    auto fail = [&] { return ConfigError("invalid money amount: '" + std::string(text) + "'"); };
    if (text.empty()) throw fail();

    std::int64_t whole = 0;
    std::size_t i = 0;
    bool any_digit = false;
    for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
        if (whole > std::numeric_limits<std::int64_t>::max() / 10 / 1'000'000) throw fail();
        whole = whole * 10 + (text[i] - '0');
        any_digit = true;
    }
    std::int64_t frac = 0;
    int frac_digits = 0;
    if (i < text.size() && text[i] == '.') {
        ++i;
        for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
            if (++frac_digits > 6) throw fail();
            frac = frac * 10 + (text[i] - '0');
            any_digit = true;
        }
    }
    if (i != text.size() || !any_digit) throw fail();
    for (int d = frac_digits; d < 6; ++d) frac *= 10;
    return Money(whole * 1'000'000 + frac);
}

std::string Money::to_string() const {
    std::int64_t v = micros_;
    std::string sign;
    if (v < 0) {
        sign = "-";
        v = -v;
    }
    std::string frac = std::to_string(v % 1'000'000);
    frac.insert(0, 6 - frac.size(), '0');
    return sign + std::to_string(v / 1'000'000) + "." + frac;
}

namespace {

Money scaled(std::int64_t tokens, Money per_million) {
    const __int128 num = static_cast<__int128>(tokens) * per_million.micros();
    const __int128 q = (num + 500'000) / 1'000'000;
    return Money::from_micros(static_cast<std::int64_t>(q));
}

}  // namespace

Money PriceTable::cost(std::int64_t prompt_tokens, std::int64_t completion_tokens) const {
    return scaled(prompt_tokens, input_per_million) + scaled(completion_tokens, output_per_million);
}

}  // namespace dsagent
