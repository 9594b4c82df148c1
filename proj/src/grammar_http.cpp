#include <httplib.h>

#include "nli/errors.hpp"
#include "nli/grammar.hpp"

namespace nli::grammar {

HttpTransport::HttpTransport(std::string endpoint, std::chrono::seconds timeout) : timeout_(timeout) {
  while (!endpoint.empty() && endpoint.back() == '/') endpoint.pop_back();
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("grammar endpoint must start with http:// or https://");
  const auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = endpoint;
  } else {
    scheme_host_port_ = endpoint.substr(0, path_start);
    base_path_ = endpoint.substr(path_start);
  }
  const std::string scheme = endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("unsupported grammar endpoint scheme: " + scheme);
}

HttpResponse HttpTransport::post_check(std::string_view text, std::string_view language) {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Params params{{"text", std::string(text)}, {"language", std::string(language)}};
  auto res = client.Post(base_path_ + "/v2/check", params);
  if (!res) {
    throw TransportError("grammar service unreachable at " + scheme_host_port_ + ": " +
                         httplib::to_string(res.error()));
  }
  return HttpResponse{res->status, res->body};
}

}  // namespace nli::grammar
