// Copyright 2026 The Perimid Authors
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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "perimid/cli.hpp"
#include "perimid/errors.hpp"

using namespace perimid;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "perimid");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path temp(const std::string& name) {
  return fs::temp_directory_path() / ("perimid_cli_" + name);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  return json::parse(in);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_metric_report(const json& j, const std::string& task) {
  REQUIRE(j.contains("report"));
  const json& r = j.at("report");
  CHECK(r.at("task") == task);
  CHECK(r.at("metrics").is_object());
  CHECK(r.at("counts").is_object());
  for (const auto& [name, value] : r.at("metrics").items()) {
    CAPTURE(name);
    CHECK(value.is_number());
  }
  for (const auto& [name, value] : r.at("counts").items()) CHECK(value.is_number_unsigned());
  CHECK(j.at("config").at("model").is_object());
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"train", "--no-such-flag"}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"train", "--epochs", "many"}).code == 1);
  CHECK(run({"train", "--lr", "0.5"}).code == 1);
  CHECK(run({"train", "--config", "/nonexistent/perimid.ini"}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("runtime failures exit 2") {
  const Run r = run({"forecast", "--csv", "/nonexistent/series.csv"});
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());
  const fs::path bad = temp("bad.csv");
  std::ofstream(bad) << "a,b\n1,2\nx,3\n";
  CHECK(run({"detect-periods", "--csv", bad.string()}).code == 2);
  fs::remove(bad);
}

TEST_CASE("detect-periods reads a CSV") {
  const fs::path csv = temp("tone.csv");
  {
    std::ofstream out(csv);
    out << "v\n";
    for (int t = 0; t < 64; ++t) out << std::sin(2 * 3.141592653589793 * 4 * t / 64.0) << '\n';
  }
  const fs::path report = temp("periods.json");
  const Run r = run({"detect-periods", "--csv", csv.string(), "--k", "2", "--out", report.string()});
  REQUIRE(r.code == 0);
  const json j = read_json(report);
  CHECK(j.at("command") == "detect-periods");
  CHECK(j.at("periods").at("frequencies") == json::array({1, 4}));
  CHECK(j.at("periods").at("periods") == json::array({64, 16}));
  fs::remove(csv);
  fs::remove(report);
}

TEST_CASE("build-pyramid writes mask and flows") {
  const fs::path report = temp("pyramid.json"), mask = temp("mask.csv");
  const Run r = run({"build-pyramid", "--length", "128", "--input-len", "32", "--k", "3", "--flows",
                     "--mask-csv", mask.string(), "--out", report.string()});
  REQUIRE(r.code == 0);
  const json j = read_json(report);
  const auto n = j.at("pyramid").at("components").size();
  CHECK(n > 3);
  CHECK(j.at("flows").is_array());
  std::istringstream rows(slurp(mask));
  std::string line;
  std::size_t count = 0;
  while (std::getline(rows, line)) ++count;
  CHECK(count == n);
  fs::remove(report);
  fs::remove(mask);
}

TEST_CASE("config precedence is defaults, file, flags") {
  const fs::path ini = temp("run.ini"), report = temp("train.json");
  std::ofstream(ini) << "[model]\nk = 2\nd_model = 8\nheads = 2\n[train]\nepochs = 3\nlr = 0.002\n"
                        "[data]\nlength = 300\n";
  const Run r = run({"train", "--config", ini.string(), "--epochs", "1", "--out", report.string()});
  REQUIRE(r.code == 0);
  const json cfg = read_json(report).at("config");
  CHECK(cfg.at("train").at("epochs") == 1);
  CHECK(cfg.at("train").at("lr") == 0.002);
  CHECK(cfg.at("model").at("k") == 2);
  CHECK(cfg.at("train").at("batch_size") == cli::default_config("train").train.batch_size);

  cli::RunConfig c = cli::default_config("train");
  cli::apply_config_file(c, ini.string());
  CHECK(c.model.encoder.d_model == 8);
  CHECK(c.data.generator.length == 300);
  std::ofstream(ini) << "[model]\nwidth = 3\n";
  CHECK_THROWS_AS(cli::apply_config_file(c, ini.string()), ConfigError);
  CHECK(run({"train", "--config", ini.string()}).code == 1);
  fs::remove(ini);
  fs::remove(report);
}

TEST_CASE("subcommand defaults") {
  CHECK(cli::default_config("gradcheck").model.input_len == 16);
  CHECK(cli::default_config("classify").model.task == TaskKind::classify);
  CHECK(cli::default_config("train").model.input_len == 96);
}

TEST_CASE("seeded runs are reproducible") {
  const fs::path a = temp("a.csv"), b = temp("b.csv"), c = temp("c.csv");
  for (const auto& [path, seed] : {std::pair{a, "7"}, std::pair{b, "7"}, std::pair{c, "8"}}) {
    REQUIRE(run({"train", "--epochs", "1", "--seed", seed, "--dropout", "0.1", "--loss-csv",
                 path.string()})
                .code == 0);
  }
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a) != slurp(c));
  for (const auto& p : {a, b, c}) fs::remove(p);
}

TEST_CASE("evaluation reports follow the schema") {
  const fs::path ckpt = temp("model.pmf"), report = temp("eval.json");
  REQUIRE(run({"train", "--epochs", "1", "--checkpoint", ckpt.string()}).code == 0);
  REQUIRE(run({"forecast", "--checkpoint", ckpt.string(), "--season", "16", "--out",
               report.string()})
              .code == 0);
  json j = read_json(report);
  CHECK(j.at("command") == "forecast");
  check_metric_report(j, "forecast");
  CHECK(j.at("report").at("metrics").contains("owa"));

  REQUIRE(run({"impute", "--input-len", "32", "--epochs", "1", "--mask-ratio", "0.5", "--out",
               report.string()})
              .code == 0);
  j = read_json(report);
  check_metric_report(j, "impute");
  CHECK(j.at("report").at("metrics").contains("baseline_mse"));

  REQUIRE(run({"anomaly", "--input-len", "32", "--epochs", "1", "--out", report.string()}).code == 0);
  j = read_json(report);
  check_metric_report(j, "anomaly");
  for (const char* m : {"precision", "recall", "f1"}) CHECK(j.at("report").at("metrics").contains(m));

  REQUIRE(run({"classify", "--input-len", "32", "--epochs", "2", "--out", report.string()}).code == 0);
  j = read_json(report);
  check_metric_report(j, "classify");
  CHECK(j.at("report").at("metrics").contains("accuracy"));
  fs::remove(ckpt);
  fs::remove(report);
}

TEST_CASE("sweep-k writes a table") {
  const fs::path table = temp("sweep.csv");
  const Run r = run({"sweep-k", "--input-len", "32", "--target-len", "8", "--epochs", "1",
                     "--k-min", "2", "--k-max", "4", "--table-csv", table.string()});
  REQUIRE(r.code == 0);
  std::istringstream rows(slurp(table));
  std::string header, line;
  std::getline(rows, header);
  CHECK(header.rfind("k,", 0) == 0);
  std::size_t count = 0;
  while (std::getline(rows, line)) ++count;
  CHECK(count == 3);
  fs::remove(table);
}

TEST_CASE("gradcheck passes on the small model") {
  const fs::path report = temp("grad.json");
  const Run r = run({"gradcheck", "--out", report.string()});
  CHECK(r.code == 0);
  const json j = read_json(report);
  CHECK(j.at("passed") == true);
  CHECK(j.at("max_relative_error").get<double>() < 1e-3);
  fs::remove(report);
}
