#include "http_util.hpp"

#include "dsagent/errors.hpp"

namespace dsagent::detail {

ParsedUrl parse_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base URL needs a scheme: '" + base_url + "'");
    auto path_start = base_url.find('/', scheme_end + 3);
    ParsedUrl out;
    out.origin = base_url.substr(0, path_start);
    if (path_start != std::string::npos) out.prefix = base_url.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    return out;
}

std::unique_ptr<httplib::Client> make_client(const ParsedUrl& url, double timeout_s) {
    auto client = std::make_unique<httplib::Client>(url.origin);
    const auto secs = static_cast<time_t>(timeout_s);
    const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
    client->set_connection_timeout(secs > 30 ? 30 : secs, usecs);
    client->set_read_timeout(secs, usecs);
    client->set_write_timeout(secs, usecs);
    return client;
}

}  // namespace dsagent::detail
