#include "dsagent/trace.hpp"

#include "dsagent/errors.hpp"

namespace dsagent {

TraceSink::TraceSink(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw ConfigError("cannot open trace file " + path.string());
}

void TraceSink::write(std::string_view type, nlohmann::json fields) {
    std::lock_guard lock(mu_);
    fields["type"] = std::string(type);
    fields["seq"] = records_.size();
    if (step_ > 0 && !fields.contains("step")) fields["step"] = step_;
    if (out_.is_open()) {
        out_ << fields.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
        out_.flush();
    }
    records_.push_back(std::move(fields));
}

std::size_t TraceSink::count(std::string_view type) const {
    std::size_t n = 0;
    for (const auto& r : records_)
        if (r.at("type").get<std::string>() == type) ++n;
    return n;
}

std::size_t TraceSink::count(std::string_view type, std::string_view role) const {
    std::size_t n = 0;
    for (const auto& r : records_)
        if (r.at("type").get<std::string>() == type && r.value("role", std::string()) == role) ++n;
    return n;
}

}  // namespace dsagent
