#include "gotu/curriculum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "gotu/errors.hpp"
#include "gotu/unseen_domain.hpp"

namespace gotu {

CurriculumSchedule make_leap_schedule(int d, int leap, double eps,
                                      long stage_budget) {
  if (leap < 1) throw InvalidInput("leap must be >= 1");
  CurriculumSchedule s;
  for (int r = leap; r < d; r += leap) s.radii.push_back(r);
  s.radii.push_back(d);
  s.loss_threshold = eps;
  s.stage_step_budget = stage_budget;
  return s;
}

std::vector<Point> sample_ball(int d, int radius, std::size_t n,
                               std::uint64_t seed) {
  const UnseenDomain ball(d, BallComplement{radius});
  return ball.sample_seen(n, seed);
}

namespace {

void validate_schedule(int d, const CurriculumSchedule& schedule) {
  if (schedule.radii.empty()) throw InvalidInput("schedule has no stages");
  if (schedule.loss_threshold <= 0.0) {
    throw InvalidInput("loss threshold must be positive");
  }
  for (std::size_t i = 1; i < schedule.radii.size(); ++i) {
    if (schedule.radii[i] <= schedule.radii[i - 1]) {
      throw InvalidInput("schedule radii must be strictly increasing");
    }
  }
  if (schedule.radii.back() != d) {
    throw InvalidInput("schedule must end at the full ball B_d");
  }
}

Eigen::MatrixXd points_matrix(int d, const std::vector<Point>& pts) {
  Eigen::MatrixXd x(pts.size(), d);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = coordinate(pts[i], j);
  }
  return x;
}

double mass_fraction_at_or_below(const FeedForwardNet& net, int radius) {
  if (net.input_dim() > 16) return std::nan("");
  const BooleanFunction f = net.to_boolean_function();
  const DegreeProfile p = degree_profile(f);
  const double total = p.total();
  if (total <= 0.0) return 0.0;
  double low = 0.0;
  for (int deg = 0; deg <= std::min(radius, p.dim); ++deg) {
    low += p.mass[p.dim - deg];
  }
  return low / total;
}

struct StageRunner {
  FeedForwardNet& net;
  MiniBatchTrainer& trainer;
  const CurriculumSchedule& schedule;

  StageRecord run(int radius, const std::vector<Point>& pts,
                  const std::vector<double>& labels) {
    StageRecord rec;
    rec.radius = radius;
    rec.stage_samples = pts.size();
    if (pts.empty()) {
      rec.skipped = true;
      return rec;
    }
    const Eigen::MatrixXd x = points_matrix(net.input_dim(), pts);
    const Eigen::VectorXd y =
        Eigen::Map<const Eigen::VectorXd>(labels.data(), labels.size());

    const long start_steps = trainer.steps();
    double loss = net.mse(x, y);
    while (loss > schedule.loss_threshold &&
           trainer.steps() - start_steps < schedule.stage_step_budget &&
           !trainer.diverged()) {
      trainer.run_epoch(x, y);
      loss = net.mse(x, y);
    }
    rec.steps = trainer.steps() - start_steps;
    rec.final_loss = loss;
    rec.reached_threshold = loss <= schedule.loss_threshold;
    rec.mass_at_or_below_radius = mass_fraction_at_or_below(net, radius);
    return rec;
  }
};

CurriculumResult finish(FeedForwardNet& net, const BooleanFunction& target,
                        CurriculumResult result) {
  const int d = net.input_dim();
  if (d <= 16) {
    const BooleanFunction learned = net.to_boolean_function();
    std::vector<Point> cube(std::size_t{1} << d);
    for (std::size_t i = 0; i < cube.size(); ++i) cube[i] = i;
    result.generalization_loss = gotu_loss(target, learned, cube);
    Mask top = 0;
    int top_deg = -1;
    for (const auto& [t, c] : target.sparse_coeffs()) {
      if (set_size(t) > top_deg) {
        top_deg = set_size(t);
        top = t;
      }
    }
    result.target_coeff = learned.coeff(top);
  } else {
    result.generalization_loss = std::nan("");
    result.target_coeff = std::nan("");
  }
  return result;
}

}  // namespace

CurriculumResult run_curriculum(const std::vector<Point>& samples,
                                const std::vector<double>& labels,
                                const BooleanFunction& target,
                                const ModelSpec& spec,
                                const CurriculumSchedule& schedule,
                                const TrainConfig& config) {
  const int d = target.dim();
  validate_schedule(d, schedule);
  if (samples.size() != labels.size()) {
    throw InvalidInput("samples and labels must match");
  }

  FeedForwardNet net = FeedForwardNet::make(d, spec, config.seed);
  MiniBatchTrainer trainer(net, config);
  StageRunner runner{net, trainer, schedule};

  CurriculumResult result;
  std::size_t previous_size = 0;
  for (int radius : schedule.radii) {
    std::vector<Point> pts;
    std::vector<double> lbl;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (std::popcount(samples[i]) <= radius) {
        pts.push_back(samples[i]);
        lbl.push_back(labels[i]);
      }
    }
    // nested stages: S_{r_i} grows with i
    if (pts.size() < previous_size) {
      throw InternalError("stage sets failed to be nested");
    }
    previous_size = pts.size();
    result.stages.push_back(runner.run(radius, pts, lbl));
    if (trainer.diverged()) {
      result.diverged = true;
      break;
    }
  }
  result.total_steps = trainer.steps();
  return finish(net, target, std::move(result));
}

CurriculumResult query_curriculum(const BooleanFunction& target,
                                  const ModelSpec& spec,
                                  const CurriculumSchedule& schedule,
                                  const std::vector<std::size_t>& stage_samples,
                                  const TrainConfig& config) {
  const int d = target.dim();
  validate_schedule(d, schedule);
  if (stage_samples.size() != schedule.radii.size()) {
    throw InvalidInput("need one sample count per stage");
  }
  for (std::size_t n : stage_samples) {
    if (n < 1) throw InvalidInput("per-stage sample counts must be >= 1");
  }

  FeedForwardNet net = FeedForwardNet::make(d, spec, config.seed);
  MiniBatchTrainer trainer(net, config);
  StageRunner runner{net, trainer, schedule};
  const auto& tv = target.values();

  CurriculumResult result;
  for (std::size_t s = 0; s < schedule.radii.size(); ++s) {
    const auto pts = sample_ball(d, schedule.radii[s], stage_samples[s],
                                 config.seed + 0x9e37ULL * (s + 1));
    std::vector<double> lbl(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) lbl[i] = tv[pts[i]];
    result.stages.push_back(runner.run(schedule.radii[s], pts, lbl));
    if (trainer.diverged()) {
      result.diverged = true;
      break;
    }
  }
  result.total_steps = trainer.steps();
  return finish(net, target, std::move(result));
}

AbComparison ab_compare(int d, const BooleanFunction& target,
                        std::size_t n_samples, const ModelSpec& spec,
                        const CurriculumSchedule& schedule,
                        const TrainConfig& config) {
  validate_schedule(d, schedule);
  Rng rng(config.seed ^ 0xab5a3dULL);
  const Point mask = (Point{1} << d) - 1;
  std::vector<Point> samples(n_samples);
  for (auto& p : samples) p = rng.bits() & mask;
  std::vector<double> labels(n_samples);
  const auto& tv = target.values();
  for (std::size_t i = 0; i < n_samples; ++i) labels[i] = tv[samples[i]];

  AbComparison out;
  out.n_samples = n_samples;
  out.curriculum =
      run_curriculum(samples, labels, target, spec, schedule, config);

  // plain arm: one stage over everything, same data/init/lr, same total budget
  CurriculumSchedule plain;
  plain.radii = {d};
  plain.loss_threshold = schedule.loss_threshold;
  plain.stage_step_budget =
      schedule.stage_step_budget * static_cast<long>(schedule.radii.size());
  out.plain = run_curriculum(samples, labels, target, spec, plain, config);
  return out;
}

}  // namespace gotu
