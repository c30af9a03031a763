#include "gotu/experiment.hpp"

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <nlohmann/json.hpp>
#include <numeric>
#include <optional>
#include <thread>
#include <vector>

#include "gotu/boolean_function.hpp"
#include "gotu/curriculum.hpp"
#include "gotu/errors.hpp"
#include "gotu/length_gen.hpp"
#include "gotu/linear_flow.hpp"
#include "gotu/md_solver.hpp"
#include "gotu/net.hpp"
#include "gotu/random_features.hpp"
#include "gotu/unseen_domain.hpp"

namespace gotu {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void atomic_write(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::ios_base::failure("cannot open " + tmp.string());
    out << content;
    if (!out.good()) throw std::ios_base::failure("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

// comma-separated, header row, LF endings, 17 significant digits
struct Csv {
  explicit Csv(std::vector<std::string> header) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) text += ',';
      text += header[i];
    }
    text += '\n';
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text += ',';
      text += cells[i];
    }
    text += '\n';
  }
  std::string text;
};

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

// ---------------------------------------------------------------- validation

class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_keys(const json& j, const std::string& path,
                  const std::vector<std::string>& required,
                  const std::vector<std::string>& optional) {
  if (!j.is_object()) throw SpecError(path + ": expected an object");
  for (const auto& k : required) {
    if (!j.contains(k)) throw SpecError(path + ": missing required field '" + k + "'");
  }
  for (const auto& [key, value] : j.items()) {
    if (std::find(required.begin(), required.end(), key) == required.end() &&
        std::find(optional.begin(), optional.end(), key) == optional.end()) {
      throw SpecError(path + ": unknown field '" + key + "'");
    }
  }
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SpecError(path + ": expected an integer");
  return j.get<int>();
}

double get_num(const json& j, const std::string& path) {
  if (!j.is_number()) throw SpecError(path + ": expected a number");
  return j.get<double>();
}

std::string get_str(const json& j, const std::string& path) {
  if (!j.is_string()) throw SpecError(path + ": expected a string");
  return j.get<std::string>();
}

std::vector<std::uint64_t> parse_seeds(const json& root) {
  if (!root.contains("seeds")) return {0};
  const json& s = root["seeds"];
  if (!s.is_array() || s.empty()) {
    throw SpecError("spec.seeds: expected a non-empty array");
  }
  std::vector<std::uint64_t> out;
  for (const auto& e : s) out.push_back(e.get<std::uint64_t>());
  return out;
}

UnseenDomain parse_domain(const json& j, int dim, const std::string& path) {
  require_keys(j, path, {"kind"},
               {"coords", "values", "mask", "sign", "i", "j", "radius", "points"});
  const std::string kind = get_str(j["kind"], path + ".kind");
  if (kind == "pattern") {
    require_keys(j, path, {"kind", "coords", "values"}, {});
    FrozenPattern fp;
    for (const auto& c : j["coords"]) fp.coords.push_back(c.get<int>());
    for (const auto& v : j["values"]) fp.values.push_back(v.get<int>());
    return UnseenDomain(dim, fp);
  }
  if (kind == "parity") {
    require_keys(j, path, {"kind", "mask", "sign"}, {});
    return UnseenDomain(dim, ParityConstraint{j["mask"].get<Mask>(),
                                              get_int(j["sign"], path + ".sign")});
  }
  if (kind == "equality") {
    require_keys(j, path, {"kind", "i", "j"}, {});
    return UnseenDomain(dim, EqualityConstraint{get_int(j["i"], path + ".i"),
                                                get_int(j["j"], path + ".j")});
  }
  if (kind == "ball-complement") {
    require_keys(j, path, {"kind", "radius"}, {});
    return UnseenDomain(dim, BallComplement{get_int(j["radius"], path + ".radius")});
  }
  if (kind == "explicit") {
    require_keys(j, path, {"kind", "points"}, {});
    Explicit ex;
    for (const auto& p : j["points"]) ex.points.push_back(p.get<Point>());
    return UnseenDomain(dim, ex);
  }
  throw SpecError(path + ".kind: unknown domain kind '" + kind + "'");
}

BooleanFunction parse_target(const json& task, int dim, const std::string& path) {
  const json& t = task["target"];
  if (t.is_string()) {
    const std::string name = t.get<std::string>();
    if (name == "parity") {
      if (!task.contains("parity_mask")) {
        throw SpecError(path + ": target 'parity' needs parity_mask");
      }
      return make_parity(dim, task["parity_mask"].get<Mask>());
    }
    if (name == "majority") {
      if (!task.contains("majority_coords")) {
        throw SpecError(path + ": target 'majority' needs majority_coords");
      }
      std::vector<int> coords;
      for (const auto& c : task["majority_coords"]) coords.push_back(c.get<int>());
      return make_majority(dim, coords);
    }
    return make_named(named_target_from_string(name), dim);
  }
  if (t.is_object()) {
    require_keys(t, path + ".target", {"coeffs"}, {});
    std::vector<std::pair<Mask, double>> terms;
    for (const auto& e : t["coeffs"]) {
      terms.emplace_back(e[0].get<Mask>(), e[1].get<double>());
    }
    return BooleanFunction::from_sparse_coeffs(dim, terms);
  }
  throw SpecError(path + ".target: expected a name or a {coeffs} object");
}

struct ParsedTask {
  BooleanFunction target;
  std::optional<UnseenDomain> domain;
};

ParsedTask parse_task(const json& root, int dim) {
  if (!root.contains("task")) throw SpecError("spec: missing required field 'task'");
  const json& task = root["task"];
  require_keys(task, "spec.task", {"target"},
               {"domain", "parity_mask", "majority_coords"});
  ParsedTask out{parse_target(task, dim, "spec.task"), std::nullopt};
  if (task.contains("domain") && !task["domain"].is_null()) {
    const json& d = task["domain"];
    if (!(d.is_string() && d.get<std::string>() == "none")) {
      out.domain = parse_domain(d.is_string()
                                    ? json::parse(parse_domain_shorthand(
                                          d.get<std::string>()))
                                    : d,
                                dim, "spec.task.domain");
    }
  }
  return out;
}

Activation parse_activation(const json& j, const std::string& path) {
  require_keys(j, path, {"kind"}, {"power"});
  const std::string kind = get_str(j["kind"], path + ".kind");
  if (kind == "relu") return Activation::relu();
  if (kind == "square") return Activation::square();
  if (kind == "poly") {
    if (!j.contains("power")) throw SpecError(path + ": poly needs 'power'");
    return Activation::polynomial_power(get_int(j["power"], path + ".power"));
  }
  throw SpecError(path + ".kind: unknown activation '" + kind + "'");
}

OptimizerConfig parse_optimizer(const json& root) {
  if (!root.contains("optimizer")) return SgdConfig{};
  const json& j = root["optimizer"];
  require_keys(j, "spec.optimizer", {"kind"},
               {"lr", "batch", "beta1", "beta2", "eps"});
  const std::string kind = get_str(j["kind"], "spec.optimizer.kind");
  if (kind == "sgd") {
    SgdConfig c;
    if (j.contains("lr")) c.lr = get_num(j["lr"], "spec.optimizer.lr");
    if (j.contains("batch")) c.batch = get_int(j["batch"], "spec.optimizer.batch");
    return c;
  }
  if (kind == "adam") {
    AdamConfig c;
    if (j.contains("lr")) c.lr = get_num(j["lr"], "spec.optimizer.lr");
    if (j.contains("batch")) c.batch = get_int(j["batch"], "spec.optimizer.batch");
    if (j.contains("beta1")) c.beta1 = get_num(j["beta1"], "spec.optimizer.beta1");
    if (j.contains("beta2")) c.beta2 = get_num(j["beta2"], "spec.optimizer.beta2");
    if (j.contains("eps")) c.eps = get_num(j["eps"], "spec.optimizer.eps");
    return c;
  }
  throw SpecError("spec.optimizer.kind: unknown optimizer '" + kind + "'");
}

ModelSpec parse_model(const json& root) {
  if (!root.contains("model")) return MlpSpec{};
  const json& j = root["model"];
  require_keys(j, "spec.model", {"kind"}, {"hidden", "neurons"});
  const std::string kind = get_str(j["kind"], "spec.model.kind");
  if (kind == "mlp") {
    MlpSpec spec;
    if (j.contains("hidden")) {
      spec.hidden.clear();
      for (const auto& h : j["hidden"]) spec.hidden.push_back(h.get<int>());
    }
    return spec;
  }
  if (kind == "mean-field") {
    MeanFieldSpec spec;
    if (j.contains("neurons")) {
      spec.neurons = get_int(j["neurons"], "spec.model.neurons");
    }
    return spec;
  }
  throw SpecError("spec.model.kind: unknown model '" + kind + "'");
}

DataSpec parse_data(const json& root) {
  DataSpec data;
  if (!root.contains("data")) return data;
  const json& j = root["data"];
  require_keys(j, "spec.data", {"mode"}, {"n_samples"});
  const std::string mode = get_str(j["mode"], "spec.data.mode");
  if (mode == "exhaustive") {
    data.mode = DataSpec::Mode::Exhaustive;
  } else if (mode == "sampled") {
    data.mode = DataSpec::Mode::Sampled;
  } else {
    throw SpecError("spec.data.mode: expected 'exhaustive' or 'sampled'");
  }
  if (j.contains("n_samples")) {
    data.n_samples = j["n_samples"].get<std::size_t>();
  }
  return data;
}

std::vector<Mask> parse_track_masks(const json& root) {
  std::vector<Mask> out;
  if (root.contains("track_masks")) {
    for (const auto& m : root["track_masks"]) out.push_back(m.get<Mask>());
  }
  return out;
}

// ---------------------------------------------------------------- pooling

void run_over_seeds(const std::vector<std::uint64_t>& seeds, int max_threads,
                    const std::function<void(std::size_t)>& job) {
  const int n_threads = std::max(
      1, std::min<int>(max_threads, static_cast<int>(seeds.size())));
  if (n_threads == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(n_threads);
  for (int w = 0; w < n_threads; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = next.fetch_add(1); i < seeds.size();
             i = next.fetch_add(1)) {
          job(i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------- commands

struct Ctx {
  json spec;
  std::string spec_text;
  fs::path out_dir;
  bool has_out_dir = false;
  int max_threads = 1;
  bool partial_failure = false;
  std::string stdout_payload;
  json summary = json::object();

  void require_out_dir() const {
    if (!has_out_dir) throw SpecError("spec.out_dir: required for this command");
  }
  void write(const std::string& name, const std::string& content) const {
    atomic_write(out_dir / name, content);
  }
};

std::string profile_json(const DegreeProfile& p) {
  json arr = json::array();
  for (double m : p.mass) arr.push_back(m);
  return arr.dump();
}

void cmd_md_solve(Ctx& ctx) {
  const int dim = get_int(ctx.spec.at("dim"), "spec.dim");
  const ParsedTask task = parse_task(ctx.spec, dim);
  if (!task.domain) throw SpecError("spec.task.domain: md-solve needs a holdout");
  const InterpolatorSolution sol = solve_md(task.target, *task.domain);

  json out;
  out["dim"] = dim;
  out["domain"] = task.domain->describe();
  json table = json::array();
  for (const auto& [mask, value] : sol.md.sparse_coeffs(1e-12)) {
    table.push_back({mask, value});
  }
  out["interpolator"] = table;
  out["degree_profile"] = json::parse(profile_json(sol.achieved_profile));
  out["residual"] = sol.residual;
  ctx.stdout_payload = out.dump(2) + "\n";
  if (ctx.has_out_dir) ctx.write("md_solution.json", ctx.stdout_payload);
  ctx.summary["residual"] = sol.residual;
}

void cmd_rf_run(Ctx& ctx) {
  ctx.require_out_dir();
  const int dim = get_int(ctx.spec.at("dim"), "spec.dim");
  const ParsedTask task = parse_task(ctx.spec, dim);
  const auto seeds = parse_seeds(ctx.spec);
  const DataSpec data = parse_data(ctx.spec);

  int n_features = 8192;
  Activation act = Activation::polynomial_power(6);
  FitOptions fit;
  fit.tol = 0.05;
  fit.throw_on_budget = false;
  std::string leak_name;
  if (ctx.spec.contains("rf")) {
    const json& j = ctx.spec["rf"];
    require_keys(j, "spec.rf", {},
                 {"n_features", "activation", "fit_method", "fit_tol",
                  "max_cg_iters", "leakage_task"});
    if (j.contains("n_features")) {
      n_features = get_int(j["n_features"], "spec.rf.n_features");
    }
    if (j.contains("activation")) {
      act = parse_activation(j["activation"], "spec.rf.activation");
    }
    if (j.contains("fit_method")) {
      const std::string m = get_str(j["fit_method"], "spec.rf.fit_method");
      if (m == "direct") {
        fit.method = FitMethod::Direct;
      } else if (m == "gd") {
        fit.method = FitMethod::GradientDescent;
      } else if (m == "cg") {
        fit.method = FitMethod::ConjugateGradient;
      } else {
        throw SpecError("spec.rf.fit_method: expected direct|gd|cg");
      }
    }
    if (j.contains("fit_tol")) fit.tol = get_num(j["fit_tol"], "spec.rf.fit_tol");
    if (j.contains("max_cg_iters")) {
      fit.max_cg_iters = j["max_cg_iters"].get<std::size_t>();
    }
    if (j.contains("leakage_task")) {
      leak_name = get_str(j["leakage_task"], "spec.rf.leakage_task");
    }
  }

  std::vector<Point> seen;
  if (data.mode == DataSpec::Mode::Exhaustive) {
    if (!task.domain) {
      seen.resize(std::size_t{1} << dim);
      std::iota(seen.begin(), seen.end(), 0);
    } else {
      seen = task.domain->enumerate_seen();
    }
  }
  const auto& tv = task.target.values();

  std::vector<json> per_seed(seeds.size());
  std::vector<double> alphas;
  std::mutex alpha_mutex;
  run_over_seeds(seeds, ctx.max_threads, [&](std::size_t i) {
    const std::uint64_t seed = seeds[i];
    std::vector<Point> pts = seen;
    if (data.mode == DataSpec::Mode::Sampled) {
      if (task.domain) {
        pts = task.domain->sample_seen(data.n_samples, seed);
      } else {
        Rng rng(seed);
        const Point cube_mask = (Point{1} << dim) - 1;
        pts.resize(data.n_samples);
        for (auto& p : pts) p = rng.bits() & cube_mask;
      }
    }
    std::vector<double> labels(pts.size());
    for (std::size_t p = 0; p < pts.size(); ++p) labels[p] = tv[pts[p]];

    RFModel model = make_rf_model(dim, n_features, act, seed);
    const FitReport rep = fit_min_norm(model, pts, labels, fit);
    const auto coeffs = extract_fourier_exact(model, 1e-8);

    Csv csv({"mask", "coefficient", "stderr"});
    for (const auto& [mask, value] : coeffs) {
      csv.row({std::to_string(mask), fmt17(value), "0"});
    }
    ctx.write("coeffs_seed_" + std::to_string(seed) + ".csv", csv.text);

    json s;
    s["seed"] = seed;
    s["fit_max_error"] = rep.max_error;
    s["fit_iterations"] = rep.iterations;
    if (!leak_name.empty()) {
      const LeakageTask lt = make_leakage_task(leak_name, dim);
      const LeakageReport lr = leakage(coeffs, lt);
      json lj;
      lj["alpha_leak"] = lr.alpha_leak;
      lj["residual"] = lr.residual;
      for (const auto& [m, v] : lr.md_coeffs) {
        lj["md_coeffs"][std::to_string(m)] = v;
      }
      for (const auto& [m, v] : lr.high_coeffs) {
        lj["high_coeffs"][std::to_string(m)] = v;
      }
      ctx.write("leakage_seed_" + std::to_string(seed) + ".json", lj.dump(2));
      s["alpha_leak"] = lr.alpha_leak;
      std::lock_guard<std::mutex> lock(alpha_mutex);
      alphas.push_back(lr.alpha_leak);
    }
    per_seed[i] = std::move(s);
  });

  ctx.summary["per_seed"] = per_seed;
  if (!alphas.empty()) {
    ctx.summary["alpha_leak_mean"] = mean_of(alphas);
    ctx.summary["alpha_leak_std"] = std_of(alphas);
  }
}

void append_trace_csv(Csv& csv, const FlowTrace& trace) {
  for (std::size_t i = 0; i < trace.t.size(); ++i) {
    std::vector<std::string> cells{fmt17(trace.t[i]), fmt17(trace.loss[i]),
                                   fmt17(trace.leakage[i]),
                                   fmt17(trace.conservation_drift[i])};
    if (!trace.bias_contributions.empty()) {
      for (double c : trace.bias_contributions[i]) cells.push_back(fmt17(c));
    }
    csv.row(cells);
  }
}

void cmd_flow_run(Ctx& ctx) {
  ctx.require_out_dir();
  if (!ctx.spec.contains("flow")) {
    throw SpecError("spec: missing required field 'flow'");
  }
  const json& j = ctx.spec["flow"];
  require_keys(j, "spec.flow", {"type"},
               {"d", "depth", "alpha", "gamma", "target", "frozen_k", "dims",
                "w_star", "b_star", "t_end", "rel_tol", "init",
                "enforce_condition"});
  const std::string type = get_str(j["type"], "spec.flow.type");
  const auto seeds = parse_seeds(ctx.spec);

  std::vector<json> per_seed(seeds.size());
  run_over_seeds(seeds, ctx.max_threads, [&](std::size_t i) {
    const std::uint64_t seed = seeds[i];
    json s;
    s["seed"] = seed;
    if (type == "diagonal") {
      DiagonalFlowConfig cfg;
      cfg.seed = seed;
      if (j.contains("d")) cfg.d = get_int(j["d"], "spec.flow.d");
      if (j.contains("depth")) cfg.depth = get_int(j["depth"], "spec.flow.depth");
      if (j.contains("alpha")) cfg.alpha = get_num(j["alpha"], "spec.flow.alpha");
      if (j.contains("frozen_k")) {
        cfg.frozen_k = get_int(j["frozen_k"], "spec.flow.frozen_k");
      }
      if (j.contains("t_end")) cfg.t_end = get_num(j["t_end"], "spec.flow.t_end");
      if (j.contains("rel_tol")) {
        cfg.rel_tol = get_num(j["rel_tol"], "spec.flow.rel_tol");
      }
      if (j.contains("target")) {
        cfg.target.clear();
        for (const auto& c : j["target"]) cfg.target.push_back(c.get<double>());
      } else {
        cfg.target.assign(cfg.d + 1, 1.0);
      }
      const FlowTrace trace = flow_diagonal(cfg);
      Csv csv({"t", "loss", "leakage", "balancedness_drift"});
      append_trace_csv(csv, trace);
      ctx.write("trace_seed_" + std::to_string(seed) + ".csv", csv.text);
      s["final_loss"] = trace.final_loss();
      s["final_leakage"] = trace.final_leakage();
      s["max_drift"] = trace.max_conservation_drift();
    } else if (type == "fc" || type == "frozen-bit") {
      std::vector<int> dims{5, 16};
      if (j.contains("dims")) {
        dims.clear();
        for (const auto& w : j["dims"]) dims.push_back(w.get<int>());
      }
      const double alpha =
          j.contains("alpha") ? get_num(j["alpha"], "spec.flow.alpha") : 0.01;
      FlowInit init = FlowInit::GaussianDirections;
      if (j.contains("init")) {
        const std::string name = get_str(j["init"], "spec.flow.init");
        if (name == "layer-uniform") {
          init = FlowInit::LayerUniform;
        } else if (name != "gaussian") {
          throw SpecError("spec.flow.init: expected gaussian|layer-uniform");
        }
      }
      if (type == "fc") {
        FcFlowConfig cfg;
        cfg.dims = dims;
        cfg.alpha = alpha;
        cfg.seed = seed;
        cfg.init = init;
        if (j.contains("gamma")) cfg.gamma = get_num(j["gamma"], "spec.flow.gamma");
        if (j.contains("t_end")) cfg.t_end = get_num(j["t_end"], "spec.flow.t_end");
        if (j.contains("enforce_condition")) {
          cfg.enforce_balance_condition = j["enforce_condition"].get<bool>();
        }
        if (j.contains("w_star")) {
          cfg.w_star.resize(j["w_star"].size());
          for (std::size_t k = 0; k < j["w_star"].size(); ++k) {
            cfg.w_star(k) = j["w_star"][k].get<double>();
          }
        } else {
          cfg.w_star = Eigen::VectorXd::Ones(dims[0]);
        }
        cfg.b_star = j.contains("b_star") ? get_num(j["b_star"], "spec.flow.b_star")
                                          : 1.0;
        const FcFlowResult res = flow_fc_linear(cfg);
        Csv csv = [&] {
          std::vector<std::string> header{"t", "loss", "leakage",
                                          "conservation_drift"};
          for (std::size_t l = 1; l <= dims.size(); ++l) {
            header.push_back("bias_contribution_" + std::to_string(l));
          }
          return Csv(header);
        }();
        append_trace_csv(csv, res.trace);
        ctx.write("trace_seed_" + std::to_string(seed) + ".csv", csv.text);
        s["final_loss"] = res.final_loss;
        s["final_b1_norm"] = res.final_b1_norm;
        s["final_first_contribution"] =
            std::abs(res.final_bias_contributions.front());
        s["max_drift"] = res.max_conservation_drift;
      } else {
        FrozenBitConfig cfg;
        cfg.dims = dims;
        cfg.alpha = alpha;
        cfg.seed = seed;
        cfg.init = init;
        if (j.contains("frozen_k")) {
          cfg.frozen_k = get_int(j["frozen_k"], "spec.flow.frozen_k");
        }
        if (j.contains("t_end")) cfg.t_end = get_num(j["t_end"], "spec.flow.t_end");
        if (j.contains("target")) {
          cfg.target.clear();
          for (const auto& c : j["target"]) cfg.target.push_back(c.get<double>());
        } else {
          cfg.target.assign(dims[0] + 1, 1.0);
        }
        const FrozenBitReport rep = frozen_bit_equivalence(cfg);
        Csv csv({"t", "loss", "leakage", "conservation_drift"});
        append_trace_csv(csv, rep.trace);
        ctx.write("trace_seed_" + std::to_string(seed) + ".csv", csv.text);
        s["final_loss"] = rep.final_loss;
        s["final_frozen_coeff"] = rep.final_frozen_coeff;
        s["max_coupling_drift"] = rep.max_coupling_drift;
      }
    } else {
      throw SpecError("spec.flow.type: expected diagonal|fc|frozen-bit");
    }
    per_seed[i] = std::move(s);
  });
  ctx.summary["per_seed"] = per_seed;
}

TrainConfig parse_train_config(const json& root, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.optimizer = parse_optimizer(root);
  cfg.seed = seed;
  cfg.track_masks = parse_track_masks(root);
  if (root.contains("train")) {
    const json& j = root["train"];
    require_keys(j, "spec.train", {},
                 {"epochs", "early_stop_loss", "step_budget", "lambda_symmetry",
                  "regularizer_samples", "max_checkpoints"});
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<long>();
    if (j.contains("early_stop_loss")) {
      cfg.early_stop_loss = get_num(j["early_stop_loss"], "spec.train.early_stop_loss");
    }
    if (j.contains("step_budget")) cfg.step_budget = j["step_budget"].get<long>();
    if (j.contains("lambda_symmetry")) {
      cfg.lambda_symmetry = get_num(j["lambda_symmetry"], "spec.train.lambda_symmetry");
    }
    if (j.contains("regularizer_samples")) {
      cfg.regularizer_samples =
          get_int(j["regularizer_samples"], "spec.train.regularizer_samples");
    }
    if (j.contains("max_checkpoints")) {
      cfg.max_checkpoints = j["max_checkpoints"].get<long>();
    }
  }
  return cfg;
}

void cmd_train(Ctx& ctx) {
  ctx.require_out_dir();
  const int dim = get_int(ctx.spec.at("dim"), "spec.dim");
  const ParsedTask task = parse_task(ctx.spec, dim);
  const auto seeds = parse_seeds(ctx.spec);
  const ModelSpec model = parse_model(ctx.spec);
  const DataSpec data = parse_data(ctx.spec);

  GotuTask gt;
  gt.target = task.target;
  gt.domain = task.domain;
  if (ctx.spec.contains("leakage_mask")) {
    gt.high_monomial = ctx.spec["leakage_mask"].get<Mask>();
  }

  std::vector<json> per_seed(seeds.size());
  std::atomic<bool> any_diverged{false};
  run_over_seeds(seeds, ctx.max_threads, [&](std::size_t i) {
    const std::uint64_t seed = seeds[i];
    TrainConfig cfg = parse_train_config(ctx.spec, seed);
    const RunRecord rec = train_no_throw(model, gt, data, cfg);
    if (rec.diverged) any_diverged = true;

    Csv csv = [&] {
      std::vector<std::string> header{"step", "epoch", "loss"};
      for (Mask m : cfg.track_masks) header.push_back("coeff_" + std::to_string(m));
      return Csv(header);
    }();
    for (const auto& cp : rec.checkpoints) {
      std::vector<std::string> cells{std::to_string(cp.step),
                                     std::to_string(cp.epoch),
                                     fmt17(cp.train_loss)};
      for (double c : cp.tracked) cells.push_back(fmt17(c));
      csv.row(cells);
    }
    ctx.write("train_seed_" + std::to_string(seed) + ".csv", csv.text);

    json s;
    s["seed"] = seed;
    s["final_train_loss"] = rec.final_train_loss;
    s["total_steps"] = rec.total_steps;
    s["diverged"] = rec.diverged;
    if (!std::isnan(rec.final_gotu)) s["final_gotu"] = rec.final_gotu;
    if (!std::isnan(rec.alpha_leak)) s["alpha_leak"] = rec.alpha_leak;
    json coeffs = json::array();
    for (const auto& [m, v] : rec.final_coeffs) {
      if (std::abs(v) > 1e-3) coeffs.push_back({m, v});
    }
    s["final_coeffs"] = coeffs;
    per_seed[i] = std::move(s);
  });
  ctx.partial_failure = any_diverged.load();
  ctx.summary["per_seed"] = per_seed;
}

void cmd_length_gen(Ctx& ctx) {
  int k_max = 10;
  if (ctx.spec.contains("length_gen")) {
    const json& j = ctx.spec["length_gen"];
    require_keys(j, "spec.length_gen", {}, {"k_max"});
    if (j.contains("k_max")) k_max = get_int(j["k_max"], "spec.length_gen.k_max");
  }
  const int dim = ctx.spec.contains("dim")
                      ? get_int(ctx.spec["dim"], "spec.dim")
                      : k_max;
  Csv csv({"k", "r", "bias", "bound", "gotu", "pass"});
  std::string text = "k\tr\tbias\tbound\tgotu\tpass\n";
  for (int k = 2; k <= k_max; ++k) {
    for (int r = 0; r < k; ++r) {
      const GotuBound gb = gotu_bound_check(k, r, std::max(dim, k));
      csv.row({std::to_string(k), std::to_string(r), std::to_string(gb.bias),
               fmt17(gb.bound), fmt17(gb.gotu), gb.pass ? "1" : "0"});
      text += std::to_string(k) + "\t" + std::to_string(r) + "\t" +
              std::to_string(gb.bias) + "\t" + fmt17(gb.bound) + "\t" +
              fmt17(gb.gotu) + "\t" + (gb.pass ? "pass" : "FAIL") + "\n";
    }
  }
  ctx.stdout_payload = text;
  if (ctx.has_out_dir) ctx.write("length_gen.csv", csv.text);
}

void cmd_curriculum(Ctx& ctx) {
  ctx.require_out_dir();
  const int dim = get_int(ctx.spec.at("dim"), "spec.dim");
  const auto seeds = parse_seeds(ctx.spec);
  const ModelSpec model = parse_model(ctx.spec);

  int leap = 2;
  double eps = 1e-3;
  long stage_budget = 100000;
  std::vector<std::size_t> samples_grid{20000};
  if (ctx.spec.contains("curriculum")) {
    const json& j = ctx.spec["curriculum"];
    require_keys(j, "spec.curriculum", {},
                 {"leap", "eps", "stage_budget", "samples_grid"});
    if (j.contains("leap")) leap = get_int(j["leap"], "spec.curriculum.leap");
    if (j.contains("eps")) eps = get_num(j["eps"], "spec.curriculum.eps");
    if (j.contains("stage_budget")) {
      stage_budget = j["stage_budget"].get<long>();
    }
    if (j.contains("samples_grid")) {
      samples_grid.clear();
      for (const auto& n : j["samples_grid"]) {
        samples_grid.push_back(n.get<std::size_t>());
      }
    }
  }

  const BooleanFunction target = make_parity(dim, (Mask{1} << dim) - 1);
  const CurriculumSchedule schedule =
      make_leap_schedule(dim, leap, eps, stage_budget);

  Csv csv({"n_samples", "gen_loss_plain_mean", "gen_loss_plain_std",
           "gen_loss_curr_mean", "gen_loss_curr_std"});
  json rows = json::array();
  for (std::size_t n : samples_grid) {
    std::vector<double> plain(seeds.size()), curr(seeds.size());
    run_over_seeds(seeds, ctx.max_threads, [&](std::size_t i) {
      TrainConfig cfg = parse_train_config(ctx.spec, seeds[i]);
      const AbComparison ab =
          ab_compare(dim, target, n, model, schedule, cfg);
      plain[i] = ab.plain.generalization_loss;
      curr[i] = ab.curriculum.generalization_loss;
    });
    csv.row({std::to_string(n), fmt17(mean_of(plain)), fmt17(std_of(plain)),
             fmt17(mean_of(curr)), fmt17(std_of(curr))});
    rows.push_back({{"n_samples", n},
                    {"plain_mean", mean_of(plain)},
                    {"plain_std", std_of(plain)},
                    {"curriculum_mean", mean_of(curr)},
                    {"curriculum_std", std_of(curr)}});
  }
  ctx.write("curriculum.csv", csv.text);
  ctx.summary["rows"] = rows;
}

void cmd_spectrum(Ctx& ctx) {
  ctx.require_out_dir();
  Activation act = Activation::relu();
  std::vector<int> dims{6, 8, 10, 12};
  std::vector<int> t_sizes{1, 2};
  int trials = 200;
  if (ctx.spec.contains("spectrum")) {
    const json& j = ctx.spec["spectrum"];
    require_keys(j, "spec.spectrum", {}, {"activation", "dims", "t_sizes", "trials"});
    if (j.contains("activation")) {
      act = parse_activation(j["activation"], "spec.spectrum.activation");
    }
    if (j.contains("dims")) {
      dims.clear();
      for (const auto& d : j["dims"]) dims.push_back(d.get<int>());
    }
    if (j.contains("t_sizes")) {
      t_sizes.clear();
      for (const auto& s : j["t_sizes"]) t_sizes.push_back(s.get<int>());
    }
    if (j.contains("trials")) trials = get_int(j["trials"], "spec.spectrum.trials");
  }
  const auto seeds = parse_seeds(ctx.spec);
  const SpectrumTable table =
      feature_spectrum_scaling(act, dims, t_sizes, trials, seeds.front());

  Csv csv({"d", "t_size", "estimate", "stderr"});
  for (const auto& row : table.rows) {
    csv.row({std::to_string(row.d), std::to_string(row.t_size),
             fmt17(row.estimate), fmt17(row.std_error)});
  }
  ctx.write("spectrum.csv", csv.text);
  for (const auto& [sz, slope] : table.slope_per_size) {
    ctx.summary["slopes"][std::to_string(sz)] = slope;
  }
  ctx.summary["cross_term_mean"] = table.cross_term_mean;
  ctx.summary["cross_term_stderr"] = table.cross_term_std_error;
}

const std::vector<std::string> kRootRequired = {"command"};
const std::vector<std::string> kRootOptional = {
    "dim",  "seeds", "out_dir",  "task",        "rf",
    "flow", "train", "model",    "optimizer",   "data",
    "track_masks",   "length_gen", "curriculum", "spectrum",
    "leakage_mask"};

}  // namespace

RunOutcome run_experiment_json(const std::string& spec_text, int max_threads) {
  RunOutcome outcome;
  Ctx ctx;
  ctx.max_threads = std::max(1, max_threads);
  ctx.spec_text = spec_text;
  try {
    ctx.spec = json::parse(spec_text);
  } catch (const json::parse_error& e) {
    outcome.exit_code = 2;
    outcome.message = std::string("spec: invalid JSON: ") + e.what();
    return outcome;
  }

  try {
    require_keys(ctx.spec, "spec", kRootRequired, kRootOptional);
    const std::string command = get_str(ctx.spec["command"], "spec.command");
    if (ctx.spec.contains("out_dir")) {
      ctx.out_dir = get_str(ctx.spec["out_dir"], "spec.out_dir");
      ctx.has_out_dir = true;
      fs::create_directories(ctx.out_dir);
      atomic_write(ctx.out_dir / "spec.json", ctx.spec.dump(2) + "\n");
    }

    if (command == "md-solve") {
      cmd_md_solve(ctx);
    } else if (command == "rf-run") {
      cmd_rf_run(ctx);
    } else if (command == "flow-run") {
      cmd_flow_run(ctx);
    } else if (command == "train") {
      cmd_train(ctx);
    } else if (command == "length-gen") {
      cmd_length_gen(ctx);
    } else if (command == "curriculum") {
      cmd_curriculum(ctx);
    } else if (command == "spectrum") {
      cmd_spectrum(ctx);
    } else {
      throw SpecError("spec.command: unknown command '" + command + "'");
    }

    if (ctx.has_out_dir) {
      ctx.summary["command"] = command;
      ctx.summary["tool_version"] = kToolVersion;
      char hash[32];
      std::snprintf(hash, sizeof(hash), "%016llx",
                    static_cast<unsigned long long>(fnv1a_hash(spec_text)));
      ctx.summary["config_hash"] = hash;
      ctx.summary["partial_failure"] = ctx.partial_failure;
      ctx.write("summary.json", ctx.summary.dump(2) + "\n");
    }
  } catch (const SpecError& e) {
    outcome.exit_code = 2;
    outcome.message = e.what();
    return outcome;
  } catch (const InvalidInput& e) {
    outcome.exit_code = 2;
    outcome.message = std::string("spec: ") + e.what();
    return outcome;
  } catch (const json::exception& e) {
    outcome.exit_code = 2;
    outcome.message = std::string("spec: ") + e.what();
    return outcome;
  } catch (const std::ios_base::failure& e) {
    outcome.exit_code = 3;
    outcome.message = std::string("I/O failure: ") + e.what();
    return outcome;
  } catch (const fs::filesystem_error& e) {
    outcome.exit_code = 3;
    outcome.message = std::string("I/O failure: ") + e.what();
    return outcome;
  }

  outcome.partial_failure = ctx.partial_failure;
  outcome.out_dir = ctx.out_dir.string();
  outcome.stdout_payload = ctx.stdout_payload;
  return outcome;
}

// ---------------------------------------------------------------- figures

namespace {

RunOutcome run_spec(json spec, int max_threads) {
  return run_experiment_json(spec.dump(2), max_threads);
}

json base_spec(const std::string& command, const std::string& out_dir) {
  json spec;
  spec["command"] = command;
  spec["out_dir"] = out_dir;
  return spec;
}

}  // namespace

RunOutcome reproduce_figure(const std::string& figure, const std::string& out_dir,
                            bool paper_scale, int max_threads) {
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  json seeds_json = json::array();
  for (auto s : seeds) seeds_json.push_back(s);

  if (figure == "fig1") {
    // RF coefficients for the three main tasks
    for (const auto& [name, domain] :
         std::vector<std::pair<std::string, std::string>>{
             {"f1", "parity:x0x1x2=-1"},
             {"f2", "pattern:x0=-1,x1=-1"},
             {"f3", "pattern:x0=-1,x1=-1,x2=-1"}}) {
      json spec = base_spec("rf-run", out_dir + "/" + name);
      spec["dim"] = 15;
      spec["seeds"] = seeds_json;
      spec["task"]["target"] = name;
      spec["task"]["domain"] = json::parse(parse_domain_shorthand(domain));
      spec["rf"]["n_features"] = paper_scale ? 8192 : 2048;
      spec["rf"]["activation"] = {{"kind", "poly"}, {"power", 6}};
      spec["rf"]["max_cg_iters"] = paper_scale ? 600 : 300;
      const RunOutcome out = run_spec(spec, max_threads);
      if (out.exit_code != 0) return out;
    }
    return {0, "", false, out_dir, ""};
  }
  if (figure == "fig2") {
    const int d = paper_scale ? 15 : 10;
    std::vector<int> radii = paper_scale ? std::vector<int>{6, 7, 8, 9, 10, 15}
                                         : std::vector<int>{2, 4, 6, 8, 10};
    TrainConfig cfg;
    cfg.optimizer = AdamConfig{1e-3, 256};
    cfg.epochs = paper_scale ? 2000 : 800;
    cfg.early_stop_loss = 1e-4;
    Csv csv({"r", "degree", "mass"});
    for (std::uint64_t seed : seeds) {
      cfg.seed = seed;
      const auto rows = length_gen_experiment(
          d, radii, MlpSpec{{256, 256}}, cfg);
      for (const auto& row : rows) {
        for (int deg = 0; deg <= row.profile.dim; ++deg) {
          csv.row({std::to_string(row.radius), std::to_string(deg),
                   fmt17(row.profile.mass[row.profile.dim - deg])});
        }
      }
    }
    fs::create_directories(out_dir);
    atomic_write(fs::path(out_dir) / "fig2.csv", csv.text);
    return {0, "", false, out_dir, ""};
  }
  if (figure == "fig3") {
    json spec = base_spec("curriculum", out_dir);
    spec["dim"] = paper_scale ? 16 : 10;
    spec["seeds"] = seeds_json;
    spec["model"] = {{"kind", "mlp"}, {"hidden", {256, 256}}};
    spec["optimizer"] = {{"kind", "adam"}, {"lr", 1e-3}, {"batch", 64}};
    spec["curriculum"]["leap"] = paper_scale ? 4 : 2;
    spec["curriculum"]["eps"] = 1e-3;
    spec["curriculum"]["samples_grid"] =
        paper_scale ? std::vector<std::size_t>{10000, 20000, 40000}
                    : std::vector<std::size_t>{5000, 20000};
    return run_spec(spec, max_threads);
  }
  if (figure == "fig4") {
    Csv csv({"d", "alpha_mean", "alpha_std"});
    for (int d : {6, 10, 14, 18}) {
      std::vector<double> alphas;
      for (std::uint64_t seed : seeds) {
        const LeakageTask task = make_leakage_task("parity2-pattern", d);
        std::vector<Point> seen;
        if (d <= 14) {
          seen = task.domain.enumerate_seen();
        } else {
          seen = task.domain.sample_seen(std::size_t{1} << 15, seed);
        }
        std::vector<double> labels(seen.size());
        const auto& tv = task.target.values();
        for (std::size_t i = 0; i < seen.size(); ++i) labels[i] = tv[seen[i]];
        RFModel model = make_rf_model(
            d, paper_scale ? 8192 : 2048, Activation::polynomial_power(6), seed);
        FitOptions fit;
        fit.tol = 0.05;
        fit.throw_on_budget = false;
        fit.max_cg_iters = 400;
        fit_min_norm(model, seen, labels, fit);
        alphas.push_back(
            leakage(extract_fourier_exact(model, 1e-8), task).alpha_leak);
      }
      csv.row({std::to_string(d), fmt17(mean_of(alphas)), fmt17(std_of(alphas))});
    }
    fs::create_directories(out_dir);
    atomic_write(fs::path(out_dir) / "fig4.csv", csv.text);
    return {0, "", false, out_dir, ""};
  }
  if (figure == "fig5") {
    const int d = paper_scale ? 15 : 10;
    GotuTask task;
    task.target = make_named(NamedTarget::F2, d);
    task.domain = UnseenDomain(d, FrozenPattern{{0, 1}, {-1, -1}});
    task.high_monomial = Mask{0b11};
    TrainConfig cfg;
    cfg.optimizer = SgdConfig{5e-4, 64};
    cfg.epochs = paper_scale ? 500 : 300;
    const auto rows = lr_sensitivity(
        MlpSpec{{256, 256, 64}}, task, DataSpec{}, cfg,
        {1e-4, 1e-3, 1e-2, 1e-1}, seeds);
    Csv csv({"lr", "alpha_mean", "alpha_std", "n_diverged"});
    for (const auto& row : rows) {
      csv.row({fmt17(row.lr), fmt17(row.mean_alpha), fmt17(row.std_alpha),
               std::to_string(row.n_diverged)});
    }
    fs::create_directories(out_dir);
    atomic_write(fs::path(out_dir) / "fig5.csv", csv.text);
    return {0, "", false, out_dir, ""};
  }
  if (figure == "fig6") {
    // leaky MD interpolators of the MLP and mean-field models on f1, f2
    Csv csv({"model", "target", "seed", "mask", "coefficient"});
    const int d = paper_scale ? 15 : 10;
    for (const std::string& target_name : {"f1", "f2"}) {
      GotuTask task;
      task.target = make_named(named_target_from_string(target_name), d);
      task.domain = target_name == "f1"
                        ? UnseenDomain(d, ParityConstraint{0b111, -1})
                        : UnseenDomain(d, FrozenPattern{{0, 1}, {-1, -1}});
      for (const std::string& model_name : {"mlp", "mean-field"}) {
        const ModelSpec spec = model_name == "mlp"
                                   ? ModelSpec{MlpSpec{{256, 256, 64}}}
                                   : ModelSpec{MeanFieldSpec{1 << 12}};
        for (std::uint64_t seed : seeds) {
          TrainConfig cfg;
          cfg.optimizer = model_name == "mlp"
                              ? OptimizerConfig{SgdConfig{5e-4, 64}}
                              : OptimizerConfig{SgdConfig{200.0, 64}};
          cfg.epochs = 400;
          cfg.seed = seed;
          const RunRecord rec = train_no_throw(spec, task, DataSpec{}, cfg);
          for (const auto& [m, v] : rec.final_coeffs) {
            if (std::abs(v) > 0.02) {
              csv.row({model_name, target_name, std::to_string(seed),
                       std::to_string(m), fmt17(v)});
            }
          }
        }
      }
    }
    fs::create_directories(out_dir);
    atomic_write(fs::path(out_dir) / "fig6.csv", csv.text);
    return {0, "", false, out_dir, ""};
  }
  if (figure == "fig7") {
    const int d = paper_scale ? 15 : 12;
    Csv csv({"activation", "seed", "mask", "coefficient"});
    for (std::uint64_t seed : seeds) {
      FitOptions fit;
      fit.tol = 0.05;
      fit.throw_on_budget = false;
      fit.max_cg_iters = 400;
      const auto rep =
          relu_parity_asymmetry(d, paper_scale ? 8192 : 2048, seed, fit);
      for (const auto& [m, v] : rep.relu_coeffs) {
        csv.row({"relu", std::to_string(seed), std::to_string(m), fmt17(v)});
      }
      for (const auto& [m, v] : rep.poly_coeffs) {
        csv.row({"poly6", std::to_string(seed), std::to_string(m), fmt17(v)});
      }
    }
    fs::create_directories(out_dir);
    atomic_write(fs::path(out_dir) / "fig7.csv", csv.text);
    return {0, "", false, out_dir, ""};
  }
  if (figure == "fig9") {
    Csv csv({"alpha", "seed", "layer", "abs_contribution"});
    const std::vector<int> dims = paper_scale ? std::vector<int>{13, 256, 256, 256}
                                              : std::vector<int>{8, 64, 64, 64};
    for (double alpha : {1.0, 0.3, 0.1, 0.03}) {
      for (std::uint64_t seed : seeds) {
        FcFlowConfig cfg;
        cfg.dims = dims;
        cfg.alpha = alpha;
        cfg.seed = seed;
        cfg.init = FlowInit::LayerUniform;
        cfg.w_star.resize(dims[0]);
        for (int i = 0; i < dims[0]; ++i) {
          cfg.w_star(i) = 1.0 + 0.125 * i;
        }
        cfg.b_star = 1.0;
        cfg.t_end = 5e4;
        cfg.loss_stop = 1e-8;
        const FcFlowResult res = flow_fc_linear(cfg);
        for (std::size_t l = 0; l < res.final_bias_contributions.size(); ++l) {
          csv.row({fmt17(alpha), std::to_string(seed), std::to_string(l + 1),
                   fmt17(std::abs(res.final_bias_contributions[l]))});
        }
      }
    }
    fs::create_directories(out_dir);
    atomic_write(fs::path(out_dir) / "fig9.csv", csv.text);
    return {0, "", false, out_dir, ""};
  }

  RunOutcome out;
  out.exit_code = 2;
  if (figure == "table1" || figure == "fig8") {
    out.message = figure +
                  " needs the transformer experiments, which this tool does "
                  "not implement; available figures: fig1 fig2 fig3 fig4 fig5 "
                  "fig6 fig7 fig9";
  } else {
    out.message = "unknown figure '" + figure +
                  "'; available: fig1 fig2 fig3 fig4 fig5 fig6 fig7 fig9";
  }
  return out;
}

std::string parse_domain_shorthand(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  json out;
  if (kind == "none") {
    return "\"none\"";
  }
  if (kind == "ball") {
    // ball:r=2
    const auto eq = rest.find('=');
    if (eq == std::string::npos || rest.substr(0, eq) != "r") {
      throw InvalidInput("ball domain syntax: ball:r=<radius>");
    }
    out["kind"] = "ball-complement";
    out["radius"] = std::stoi(rest.substr(eq + 1));
    return out.dump();
  }
  if (kind == "parity") {
    // parity:x0x1x2=-1
    const auto eq = rest.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput("parity domain syntax: parity:x0x1x2=<+-1>");
    }
    Mask mask = 0;
    const std::string vars = rest.substr(0, eq);
    std::size_t pos = 0;
    while (pos < vars.size()) {
      if (vars[pos] != 'x') throw InvalidInput("parity domain: expected 'x<i>'");
      std::size_t end = pos + 1;
      while (end < vars.size() && std::isdigit(vars[end])) ++end;
      mask |= Mask{1} << std::stoi(vars.substr(pos + 1, end - pos - 1));
      pos = end;
    }
    out["kind"] = "parity";
    out["mask"] = mask;
    out["sign"] = std::stoi(rest.substr(eq + 1));
    return out.dump();
  }
  if (kind == "pattern") {
    // pattern:x0=-1,x1=-1
    out["kind"] = "pattern";
    out["coords"] = json::array();
    out["values"] = json::array();
    std::size_t pos = 0;
    while (pos < rest.size()) {
      auto comma = rest.find(',', pos);
      if (comma == std::string::npos) comma = rest.size();
      const std::string item = rest.substr(pos, comma - pos);
      const auto eq = item.find('=');
      if (eq == std::string::npos || item[0] != 'x') {
        throw InvalidInput("pattern domain syntax: pattern:x0=-1,x1=+1");
      }
      out["coords"].push_back(std::stoi(item.substr(1, eq - 1)));
      out["values"].push_back(std::stoi(item.substr(eq + 1)));
      pos = comma + 1;
    }
    return out.dump();
  }
  if (kind == "equality") {
    // equality:x1=-x2
    const auto eq = rest.find("=-x");
    if (eq == std::string::npos || rest[0] != 'x') {
      throw InvalidInput("equality domain syntax: equality:x<i>=-x<j>");
    }
    out["kind"] = "equality";
    out["i"] = std::stoi(rest.substr(1, eq - 1));
    out["j"] = std::stoi(rest.substr(eq + 3));
    return out.dump();
  }
  throw InvalidInput("unknown domain shorthand '" + kind + "'");
}

std::string experiment_schema_json() {
  // JSON Schema (draft 2020-12) for the ExperimentSpec document
  static const char* kSchema = R"({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "ExperimentSpec",
  "type": "object",
  "additionalProperties": false,
  "required": ["command"],
  "properties": {
    "command": {"enum": ["md-solve", "rf-run", "flow-run", "train", "length-gen", "curriculum", "spectrum"]},
    "dim": {"type": "integer", "minimum": 1, "maximum": 25},
    "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
    "out_dir": {"type": "string"},
    "leakage_mask": {"type": "integer"},
    "track_masks": {"type": "array", "items": {"type": "integer"}},
    "task": {
      "type": "object",
      "additionalProperties": false,
      "required": ["target"],
      "properties": {
        "target": {"oneOf": [
          {"enum": ["f1", "f2", "f3", "f4", "parity", "majority"]},
          {"type": "object", "additionalProperties": false, "required": ["coeffs"],
           "properties": {"coeffs": {"type": "array", "items": {"type": "array", "prefixItems": [{"type": "integer"}, {"type": "number"}]}}}}
        ]},
        "parity_mask": {"type": "integer"},
        "majority_coords": {"type": "array", "items": {"type": "integer"}},
        "domain": {"oneOf": [
          {"type": "string"},
          {"type": "object", "additionalProperties": false, "required": ["kind"],
           "properties": {
             "kind": {"enum": ["pattern", "parity", "equality", "ball-complement", "explicit"]},
             "coords": {"type": "array", "items": {"type": "integer"}},
             "values": {"type": "array", "items": {"enum": [1, -1]}},
             "mask": {"type": "integer"}, "sign": {"enum": [1, -1]},
             "i": {"type": "integer"}, "j": {"type": "integer"},
             "radius": {"type": "integer"},
             "points": {"type": "array", "items": {"type": "integer"}}}}
        ]}
      }
    },
    "rf": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "n_features": {"type": "integer", "minimum": 1},
        "activation": {"$ref": "#/$defs/activation"},
        "fit_method": {"enum": ["direct", "gd", "cg"]},
        "fit_tol": {"type": "number"},
        "max_cg_iters": {"type": "integer"},
        "leakage_task": {"enum": ["parity2-pattern", "parity4-frozen", "parityk-frozen"]}
      }
    },
    "flow": {
      "type": "object", "additionalProperties": false, "required": ["type"],
      "properties": {
        "type": {"enum": ["diagonal", "fc", "frozen-bit"]},
        "d": {"type": "integer"}, "depth": {"type": "integer"},
        "alpha": {"type": "number"}, "gamma": {"type": "number"},
        "target": {"type": "array", "items": {"type": "number"}},
        "frozen_k": {"type": "integer"},
        "dims": {"type": "array", "items": {"type": "integer"}},
        "w_star": {"type": "array", "items": {"type": "number"}},
        "b_star": {"type": "number"},
        "t_end": {"type": "number"}, "rel_tol": {"type": "number"},
        "init": {"enum": ["gaussian", "layer-uniform"]},
        "enforce_condition": {"type": "boolean"}
      }
    },
    "model": {
      "type": "object", "additionalProperties": false, "required": ["kind"],
      "properties": {
        "kind": {"enum": ["mlp", "mean-field"]},
        "hidden": {"type": "array", "items": {"type": "integer"}},
        "neurons": {"type": "integer"}
      }
    },
    "optimizer": {
      "type": "object", "additionalProperties": false, "required": ["kind"],
      "properties": {
        "kind": {"enum": ["sgd", "adam"]},
        "lr": {"type": "number"}, "batch": {"type": "integer"},
        "beta1": {"type": "number"}, "beta2": {"type": "number"}, "eps": {"type": "number"}
      }
    },
    "data": {
      "type": "object", "additionalProperties": false, "required": ["mode"],
      "properties": {"mode": {"enum": ["exhaustive", "sampled"]}, "n_samples": {"type": "integer"}}
    },
    "train": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "epochs": {"type": "integer"}, "early_stop_loss": {"type": "number"},
        "step_budget": {"type": "integer"}, "lambda_symmetry": {"type": "number"},
        "regularizer_samples": {"type": "integer"}, "max_checkpoints": {"type": "integer"}
      }
    },
    "length_gen": {
      "type": "object", "additionalProperties": false,
      "properties": {"k_max": {"type": "integer", "minimum": 2}}
    },
    "curriculum": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "leap": {"type": "integer", "minimum": 1}, "eps": {"type": "number"},
        "stage_budget": {"type": "integer"},
        "samples_grid": {"type": "array", "items": {"type": "integer"}}
      }
    },
    "spectrum": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "activation": {"$ref": "#/$defs/activation"},
        "dims": {"type": "array", "items": {"type": "integer", "maximum": 14}},
        "t_sizes": {"type": "array", "items": {"type": "integer"}},
        "trials": {"type": "integer", "minimum": 2}
      }
    }
  },
  "$defs": {
    "activation": {
      "type": "object", "additionalProperties": false, "required": ["kind"],
      "properties": {"kind": {"enum": ["relu", "poly", "square"]}, "power": {"type": "integer", "minimum": 1}}
    }
  }
})";
  return kSchema;
}

}  // namespace gotu
