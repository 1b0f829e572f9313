// Copyright 2026 The otelcity Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// otelcity: OTLP trace receiver, analysis pipeline and query API.
//
//   otelcity serve  [--config FILE] [--set key=value ...]
//   otelcity import --file FILE [--config FILE] [--set key=value ...]

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "otelcity/server.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

otelcity::ServiceConfig build_config(const std::string& file, const std::vector<std::string>& sets) {
  auto cfg = file.empty() ? otelcity::ServiceConfig{} : otelcity::ServiceConfig::from_file(file);
  for (const auto& s : sets) cfg.set_from_string(s);
  return cfg;
}

int serve(const otelcity::ServiceConfig& cfg) {
  otelcity::Pipeline pipeline(cfg);
  for (const auto& w : pipeline.load_report().warnings) std::cerr << "warning: skipped " << w << "\n";
  if (pipeline.load_report().loaded) std::cerr << "restored " << pipeline.load_report().loaded << " windows\n";
  otelcity::Server server(pipeline);
  server.start();
  pipeline.start();
  std::cerr << "otlp receiver on " << cfg.host << ":" << server.ingest_port() << "/v1/traces, api on " << cfg.host
            << ":" << server.api_port() << "/api\n";
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  pipeline.stop();
  std::cerr << otelcity::to_json(pipeline.status()).dump() << "\n";
  return 0;
}

int import(const otelcity::ServiceConfig& cfg, const std::string& file) {
  otelcity::Pipeline pipeline(cfg);
  auto summary = pipeline.import_file(file);
  pipeline.flush();
  nlohmann::json out = {{"accepted", summary.accepted},
                        {"rejected", summary.rejected},
                        {"dropped", summary.dropped},
                        {"malformed_lines", summary.malformed},
                        {"status", otelcity::to_json(pipeline.status())}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"otelcity - OpenTelemetry trace analysis and software-city layout service"};
  app.require_subcommand(1);
  std::string config_file;
  std::vector<std::string> sets;
  std::string import_file;

  auto* serve_cmd = app.add_subcommand("serve", "Run the OTLP receiver, pipeline and query API");
  auto* import_cmd = app.add_subcommand("import", "Replay an OTLP/JSON lines file offline and persist the windows");
  for (auto* cmd : {serve_cmd, import_cmd}) {
    cmd->add_option("--config", config_file, "JSON config file (flat dotted keys or nested objects)");
    cmd->add_option("--set", sets, "Override one config key, e.g. --set ingest.capacity_spans=10000");
  }
  import_cmd->add_option("--file", import_file, "OTLP/JSON export requests, one per line")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    auto cfg = build_config(config_file, sets);
    if (*serve_cmd) return serve(cfg);
    return import(cfg, import_file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
