#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "gotu/experiment.hpp"

using namespace gotu;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gotu_test" / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("md-solve spec prints the f1 interpolator") {
  json spec;
  spec["command"] = "md-solve";
  spec["dim"] = 15;
  spec["task"]["target"] = "f1";
  spec["task"]["domain"] = "parity:x0x1x2=-1";
  const auto out = run_experiment_json(spec.dump(), 1);
  REQUIRE(out.exit_code == 0);
  const json payload = json::parse(out.stdout_payload);
  bool found_x2 = false;
  for (const auto& row : payload["interpolator"]) {
    if (row[0].get<int>() == 4) {
      found_x2 = true;
      CHECK(std::abs(row[1].get<double>() - 1.0) < 1e-9);
    }
  }
  CHECK(found_x2);
  CHECK(payload["residual"].get<double>() <= 1e-9);
}

TEST_CASE("unknown and missing fields are spec violations with exit 2") {
  {
    const auto out = run_experiment_json(R"({"dim": 4})", 1);
    CHECK(out.exit_code == 2);
    CHECK(out.message.find("command") != std::string::npos);
  }
  {
    const auto out = run_experiment_json(
        R"({"command": "md-solve", "dim": 4, "bogus": 1})", 1);
    CHECK(out.exit_code == 2);
    CHECK(out.message.find("bogus") != std::string::npos);
  }
  {
    const auto out = run_experiment_json(
        R"({"command": "md-solve", "dim": 4,
            "task": {"target": "f2", "domain": {"kind": "pattern",
                     "coords": [0,1], "values": [-1,-1], "oops": true}}})",
        1);
    CHECK(out.exit_code == 2);
    CHECK(out.message.find("spec.task.domain") != std::string::npos);
    CHECK(out.message.find("oops") != std::string::npos);
  }
  {
    const auto out = run_experiment_json("{not json", 1);
    CHECK(out.exit_code == 2);
  }
  // spec violations must not leave files behind
  const fs::path dir = fresh_dir("no_output_on_error");
  json spec;
  spec["command"] = "rf-run";
  spec["dim"] = 5;
  spec["out_dir"] = dir.string();
  spec["task"]["target"] = "no-such-target";
  spec["task"]["domain"] = "pattern:x0=-1";
  const auto out = run_experiment_json(spec.dump(), 1);
  CHECK(out.exit_code == 2);
  CHECK_FALSE(fs::exists(dir / "summary.json"));
}

TEST_CASE("rf-run writes per-seed coefficient tables and a leakage summary") {
  const fs::path dir = fresh_dir("rf_run");
  json spec;
  spec["command"] = "rf-run";
  spec["dim"] = 6;
  spec["out_dir"] = dir.string();
  spec["seeds"] = {1, 2, 3};
  spec["task"]["target"] = "f2";
  spec["task"]["domain"] = "pattern:x0=-1,x1=-1";
  spec["rf"]["n_features"] = 256;
  spec["rf"]["activation"] = {{"kind", "poly"}, {"power", 6}};
  spec["rf"]["leakage_task"] = "parity2-pattern";
  const auto out = run_experiment_json(spec.dump(), 2);
  REQUIRE(out.exit_code == 0);

  for (int seed : {1, 2, 3}) {
    CHECK(fs::exists(dir / ("coeffs_seed_" + std::to_string(seed) + ".csv")));
    CHECK(fs::exists(dir / ("leakage_seed_" + std::to_string(seed) + ".json")));
  }
  const json summary = json::parse(slurp(dir / "summary.json"));
  CHECK(summary["per_seed"].size() == 3);
  CHECK(summary.contains("alpha_leak_mean"));
  CHECK(summary["tool_version"] == kToolVersion);
  CHECK(summary["config_hash"].get<std::string>().size() == 16);

  // CSV dialect: header + comma separation, LF endings
  const std::string csv = slurp(dir / "coeffs_seed_1.csv");
  CHECK(csv.rfind("mask,coefficient,stderr\n", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
}

TEST_CASE("identical specs byte-identically reproduce per-seed files") {
  const fs::path a = fresh_dir("repro_a");
  const fs::path b = fresh_dir("repro_b");
  for (const fs::path& dir : {a, b}) {
    json spec;
    spec["command"] = "rf-run";
    spec["dim"] = 6;
    spec["out_dir"] = dir.string();
    spec["seeds"] = {7};
    spec["task"]["target"] = "f2";
    spec["task"]["domain"] = "pattern:x0=-1,x1=-1";
    spec["rf"]["n_features"] = 128;
    spec["rf"]["activation"] = {{"kind", "poly"}, {"power", 4}};
    REQUIRE(run_experiment_json(spec.dump(), 1).exit_code == 0);
  }
  CHECK(slurp(a / "coeffs_seed_7.csv") == slurp(b / "coeffs_seed_7.csv"));
}

TEST_CASE("flow-run bundles per-seed traces") {
  const fs::path dir = fresh_dir("flow_run");
  json spec;
  spec["command"] = "flow-run";
  spec["out_dir"] = dir.string();
  spec["seeds"] = {1, 2};
  spec["flow"]["type"] = "diagonal";
  spec["flow"]["d"] = 4;
  spec["flow"]["depth"] = 2;
  spec["flow"]["alpha"] = 0.05;
  const auto out = run_experiment_json(spec.dump(), 2);
  REQUIRE(out.exit_code == 0);
  const std::string csv = slurp(dir / "trace_seed_1.csv");
  CHECK(csv.rfind("t,loss,leakage,balancedness_drift\n", 0) == 0);
  const json summary = json::parse(slurp(dir / "summary.json"));
  CHECK(summary["per_seed"].size() == 2);
  CHECK(summary["per_seed"][0]["final_loss"].get<double>() <= 1e-6);
}

TEST_CASE("train command records divergence as a partial failure") {
  const fs::path dir = fresh_dir("train_diverge");
  json spec;
  spec["command"] = "train";
  spec["dim"] = 6;
  spec["out_dir"] = dir.string();
  spec["seeds"] = {1};
  spec["task"]["target"] = "f2";
  spec["task"]["domain"] = "pattern:x0=-1,x1=-1";
  spec["model"] = {{"kind", "mlp"}, {"hidden", {16, 16}}};
  spec["optimizer"] = {{"kind", "sgd"}, {"lr", 50.0}, {"batch", 16}};
  spec["train"]["epochs"] = 20;
  const auto out = run_experiment_json(spec.dump(), 1);
  CHECK(out.exit_code == 0);
  CHECK(out.partial_failure);
  const json summary = json::parse(slurp(dir / "summary.json"));
  CHECK(summary["partial_failure"].get<bool>());
  CHECK(summary["per_seed"][0]["diverged"].get<bool>());
}

TEST_CASE("train command writes the tracked-coefficient CSV") {
  const fs::path dir = fresh_dir("train_ok");
  json spec;
  spec["command"] = "train";
  spec["dim"] = 6;
  spec["out_dir"] = dir.string();
  spec["seeds"] = {1, 2};
  spec["task"]["target"] = "f2";
  spec["task"]["domain"] = "pattern:x0=-1,x1=-1";
  spec["model"] = {{"kind", "mlp"}, {"hidden", {32, 32}}};
  spec["optimizer"] = {{"kind", "sgd"}, {"lr", 5e-4}, {"batch", 64}};
  spec["train"]["epochs"] = 10;
  spec["track_masks"] = {0, 1, 2, 3};
  spec["leakage_mask"] = 3;
  const auto out = run_experiment_json(spec.dump(), 2);
  REQUIRE(out.exit_code == 0);
  const std::string csv = slurp(dir / "train_seed_1.csv");
  CHECK(csv.rfind("step,epoch,loss,coeff_0,coeff_1,coeff_2,coeff_3\n", 0) == 0);
  const json summary = json::parse(slurp(dir / "summary.json"));
  CHECK(summary["per_seed"].size() == 2);
  CHECK(summary["per_seed"][0].contains("alpha_leak"));
}

TEST_CASE("length-gen prints the full bound table") {
  json spec;
  spec["command"] = "length-gen";
  spec["length_gen"]["k_max"] = 6;
  const auto out = run_experiment_json(spec.dump(), 1);
  REQUIRE(out.exit_code == 0);
  // rows for all r < k <= 6, all passing
  int rows = 0;
  std::istringstream lines(out.stdout_payload);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    ++rows;
    CHECK(line.find("FAIL") == std::string::npos);
  }
  CHECK(rows == 2 + 3 + 4 + 5 + 6);
}

TEST_CASE("spectrum command writes the scaling table") {
  const fs::path dir = fresh_dir("spectrum");
  json spec;
  spec["command"] = "spectrum";
  spec["out_dir"] = dir.string();
  spec["spectrum"]["activation"] = {{"kind", "square"}};
  spec["spectrum"]["dims"] = {6, 8};
  spec["spectrum"]["t_sizes"] = {1, 2};
  spec["spectrum"]["trials"] = 50;
  const auto out = run_experiment_json(spec.dump(), 1);
  REQUIRE(out.exit_code == 0);
  const std::string csv = slurp(dir / "spectrum.csv");
  CHECK(csv.rfind("d,t_size,estimate,stderr\n", 0) == 0);
  const json summary = json::parse(slurp(dir / "summary.json"));
  CHECK(summary["slopes"].contains("1"));
}

TEST_CASE("out-of-scope figures exit 2 with an explanation") {
  const auto out = reproduce_figure("table1", "/tmp/gotu_test/fig", false, 1);
  CHECK(out.exit_code == 2);
  CHECK(out.message.find("transformer") != std::string::npos);
  const auto unknown = reproduce_figure("fig12", "/tmp/gotu_test/fig", false, 1);
  CHECK(unknown.exit_code == 2);
}

TEST_CASE("domain shorthand covers every kind") {
  CHECK(json::parse(parse_domain_shorthand("parity:x0x1x2=-1")) ==
        json({{"kind", "parity"}, {"mask", 7}, {"sign", -1}}));
  CHECK(json::parse(parse_domain_shorthand("pattern:x0=-1,x3=1")) ==
        json({{"kind", "pattern"}, {"coords", {0, 3}}, {"values", {-1, 1}}}));
  CHECK(json::parse(parse_domain_shorthand("equality:x1=-x2")) ==
        json({{"kind", "equality"}, {"i", 1}, {"j", 2}}));
  CHECK(json::parse(parse_domain_shorthand("ball:r=2")) ==
        json({{"kind", "ball-complement"}, {"radius", 2}}));
}

TEST_CASE("the shipped schema parses and covers the commands") {
  const json schema = json::parse(experiment_schema_json());
  CHECK(schema["properties"]["command"]["enum"].size() == 7);
}
