// Command-line front end: experiment specs in, CSV/JSON bundles out.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <thread>

#include "gotu/experiment.hpp"

namespace {

using nlohmann::json;

int thread_cap() {
  if (const char* env = std::getenv("GOTU_LAB_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "cannot read spec file: " << path << "\n";
    std::exit(3);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int finish(const gotu::RunOutcome& out) {
  if (!out.stdout_payload.empty()) std::cout << out.stdout_payload;
  if (out.exit_code != 0) {
    std::cerr << out.message << "\n";
  } else if (out.partial_failure) {
    std::cerr << "warning: some seeds diverged; see summary.json\n";
  }
  return out.exit_code;
}

int run_json_spec(json spec, int threads) {
  return finish(gotu::run_experiment_json(spec.dump(2), threads));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GOTU lab: min-degree interpolators, random-features and "
               "network training on Boolean holdout tasks"};
  app.require_subcommand(1);
  int threads = thread_cap();
  app.add_option("--threads", threads, "worker pool size for per-seed jobs");

  std::string spec_path;
  auto add_spec_option = [&](CLI::App* cmd) {
    cmd->add_option("--spec", spec_path, "full ExperimentSpec JSON file");
  };

  // ---- md-solve ----
  auto* md = app.add_subcommand("md-solve", "minimum degree-profile interpolator");
  std::string md_task = "f1", md_domain = "parity:x0x1x2=-1", md_out;
  int md_dim = 15;
  add_spec_option(md);
  md->add_option("--task", md_task, "f1|f2|f3|f4 or JSON {coeffs:[[mask,c],...]}");
  md->add_option("--domain", md_domain,
                 "holdout, e.g. parity:x0x1x2=-1 | pattern:x0=-1,x1=-1 | "
                 "equality:x1=-x2 | ball:r=2");
  md->add_option("--dim", md_dim, "ambient dimension");
  md->add_option("--out", md_out, "optional output directory");

  // ---- rf-run ----
  auto* rf = app.add_subcommand("rf-run", "random-features fit and spectrum");
  add_spec_option(rf);

  // ---- flow-run ----
  auto* flow = app.add_subcommand("flow-run", "linear-network gradient flow");
  add_spec_option(flow);

  // ---- train ----
  auto* train = app.add_subcommand("train", "MLP / mean-field training");
  add_spec_option(train);

  // ---- length-gen ----
  auto* lg = app.add_subcommand("length-gen", "ball-interpolator bound table");
  int lg_kmax = 10;
  std::string lg_out;
  add_spec_option(lg);
  lg->add_option("--k-max", lg_kmax, "largest parity degree");
  lg->add_option("--out", lg_out, "optional output directory");

  // ---- curriculum ----
  auto* curr = app.add_subcommand("curriculum", "degree-curriculum A/B harness");
  add_spec_option(curr);

  // ---- spectrum ----
  auto* spectrum = app.add_subcommand("spectrum", "random-feature mass scaling");
  add_spec_option(spectrum);

  // ---- reproduce ----
  auto* rep = app.add_subcommand("reproduce", "desk-scale figure bundles");
  std::string rep_figure, rep_out = "out";
  bool rep_paper = false;
  rep->add_option("figure", rep_figure, "fig1..fig5, fig6, fig7, fig9")->required();
  rep->add_option("--out", rep_out, "output directory");
  rep->add_flag("--paper-scale", rep_paper, "use paper-scale parameters");

  // ---- schema ----
  auto* schema = app.add_subcommand("schema", "print the ExperimentSpec JSON schema");

  CLI11_PARSE(app, argc, argv);

  if (schema->parsed()) {
    std::cout << gotu::experiment_schema_json() << "\n";
    return 0;
  }
  if (rep->parsed()) {
    return finish(gotu::reproduce_figure(rep_figure, rep_out, rep_paper, threads));
  }

  // spec file passthrough for every experiment subcommand
  if (!spec_path.empty()) {
    return finish(gotu::run_experiment_json(read_file(spec_path), threads));
  }

  if (md->parsed()) {
    json spec;
    spec["command"] = "md-solve";
    spec["dim"] = md_dim;
    if (!md_task.empty() && md_task.front() == '{') {
      spec["task"]["target"] = json::parse(md_task);
    } else {
      spec["task"]["target"] = md_task;
    }
    try {
      spec["task"]["domain"] = json::parse(gotu::parse_domain_shorthand(md_domain));
    } catch (const std::exception& e) {
      std::cerr << "spec.task.domain: " << e.what() << "\n";
      return 2;
    }
    if (!md_out.empty()) spec["out_dir"] = md_out;
    return run_json_spec(spec, threads);
  }
  if (lg->parsed()) {
    json spec;
    spec["command"] = "length-gen";
    spec["length_gen"]["k_max"] = lg_kmax;
    if (!lg_out.empty()) spec["out_dir"] = lg_out;
    return run_json_spec(spec, threads);
  }

  std::cerr << "this subcommand needs --spec <file.json>; see `gotu schema`\n";
  return 2;
}
