#pragma once

#include <memory>
#include <string>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace dsagent::detail {

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path without trailing slash, may be empty
};

ParsedUrl parse_base_url(const std::string& base_url);

std::unique_ptr<httplib::Client> make_client(const ParsedUrl& url, double timeout_s);

}  // namespace dsagent::detail
