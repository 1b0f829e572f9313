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

//   loadgen generate --scenario FILE --out FILE --truth FILE
//   loadgen send     --scenario FILE --target URL [--rate N] [--posters N] [--encoding json|protobuf] [--truth FILE]
//
// Exit codes: 0 ok, 2 scenario validation failure, 1 any other error.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "otelcity/loadgen_send.hpp"

namespace lg = otelcity::loadgen;

namespace {

void write_truth(const lg::GroundTruth& truth, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << lg::to_json(truth).dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"loadgen - synthetic OTLP workloads with ground truth"};
  app.require_subcommand(1);
  std::string scenario_file, out_file, truth_file, target, encoding = "protobuf";
  double rate = 0;
  std::size_t posters = 4;

  auto* gen = app.add_subcommand("generate", "Write the scenario's spans as OTLP/JSON lines plus ground truth");
  gen->add_option("--scenario", scenario_file)->required();
  gen->add_option("--out", out_file)->required();
  gen->add_option("--truth", truth_file)->required();

  auto* send = app.add_subcommand("send", "Post the scenario's spans to an OTLP/HTTP receiver");
  send->add_option("--scenario", scenario_file)->required();
  send->add_option("--target", target, "Receiver base URL, e.g. http://127.0.0.1:4318")->required();
  send->add_option("--rate", rate, "Spans per second (default: unlimited)");
  send->add_option("--posters", posters, "Concurrent posting connections")->check(CLI::PositiveNumber);
  send->add_option("--encoding", encoding)->check(CLI::IsMember({"json", "protobuf"}));
  send->add_option("--truth", truth_file, "Also write the ground truth here");

  CLI11_PARSE(app, argc, argv);
  try {
    auto scenario = lg::load_scenario(scenario_file);
    if (*gen) {
      std::ofstream out(out_file);
      if (!out) throw std::runtime_error("cannot write " + out_file);
      auto truth = lg::generate_to_stream(scenario, out);
      out.close();
      write_truth(truth, truth_file);
      return 0;
    }
    lg::SendOptions opts;
    opts.target_url = target;
    if (rate > 0) opts.rate = rate;
    opts.posters = posters;
    opts.encoding = encoding == "json" ? otelcity::otlp::Encoding::json : otelcity::otlp::Encoding::protobuf;
    auto report = lg::send(scenario, opts);
    if (!truth_file.empty()) write_truth(report.truth, truth_file);
    std::cout << lg::to_json(report).dump(2) << "\n";
    return report.unacknowledged_spans == 0 ? 0 : 1;
  } catch (const lg::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
