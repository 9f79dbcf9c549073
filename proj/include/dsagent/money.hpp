#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace dsagent {

/// Exact currency amount with six fractional digits, stored as integer micro-units.
class Money {
public:
    constexpr Money() = default;

    static constexpr Money from_micros(std::int64_t micros) { return Money(micros); }

    /// Parses "12", "0.5", "0.000125". More than six fractional digits or a sign is an error.
    static Money parse(std::string_view text);

    constexpr std::int64_t micros() const { return micros_; }

    /// Always six fractional digits: "0.001250".
    std::string to_string() const;

    constexpr Money& operator+=(Money other) {
        micros_ += other.micros_;
        return *this;
    }
    friend constexpr Money operator+(Money a, Money b) { return a += b; }
    friend constexpr auto operator<=>(Money, Money) = default;

private:
    constexpr explicit Money(std::int64_t micros) : micros_(micros) {}
    std::int64_t micros_ = 0;
};

/// Per-million-token prices for one model.
struct PriceTable {
    Money input_per_million;
    Money output_per_million;

    /// tokens * price / 1e6, rounded half-up to the micro-unit.
    Money cost(std::int64_t prompt_tokens, std::int64_t completion_tokens) const;
};

}  // namespace dsagent
