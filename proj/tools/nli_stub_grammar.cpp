// nli-stub-grammar: serves the rule-based stub checker on /v2/check so the
// HTTP path of the pipeline can run without a LanguageTool installation.

#include <iostream>
#include <memory>

// Eigen (through the synth header) must come before httplib, whose resolver
// include defines a _res macro.
#include "nli/synth.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#ifndef NLI_RESOURCE_DIR
#define NLI_RESOURCE_DIR "resources"
#endif

int main(int argc, char** argv) {
  CLI::App app{"Stub grammar service"};
  std::string host = "127.0.0.1";
  int port = 8081;
  std::string dictionary = std::string(NLI_RESOURCE_DIR) + "/frequency_dictionary_en.txt";
  app.add_option("--host", host)->capture_default_str();
  app.add_option("--port", port)->capture_default_str();
  app.add_option("--dictionary", dictionary)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const auto checker = std::make_shared<nli::synth::StubChecker>(nli::synth::load_word_set(dictionary));
  httplib::Server server;
  server.Post("/v2/check", [&](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("text")) {
      res.status = 400;
      res.set_content("missing text", "text/plain");
      return;
    }
    if (req.get_param_value("language") != "en-US") {
      res.status = 400;
      res.set_content("unsupported language", "text/plain");
      return;
    }
    res.set_content(checker->check_json(req.get_param_value("text")), "application/json");
  });
  std::cout << "listening on http://" << host << ":" << port << "/v2/check" << std::endl;
  if (!server.listen(host, port)) {
    std::cerr << "cannot listen on " << host << ":" << port << "\n";
    return 3;
  }
  return 0;
}
