#pragma once

#include <cstdint>
#include <vector>

#include "gotu/boolean_function.hpp"
#include "gotu/net.hpp"

namespace gotu {

struct CurriculumSchedule {
  std::vector<int> radii;  // strictly increasing, last one == d
  double loss_threshold = 1e-3;
  long stage_step_budget = 100000;
};

// leap-1 / leap-4 style schedules scaled to the configured dimension
CurriculumSchedule make_leap_schedule(int d, int leap, double eps,
                                      long stage_budget = 100000);

struct StageRecord {
  int radius = 0;
  long steps = 0;
  double final_loss = 0.0;
  bool reached_threshold = false;
  bool skipped = false;           // empty stage set
  std::size_t stage_samples = 0;
  double mass_at_or_below_radius = 0.0;  // fraction of learned Fourier mass
};

struct CurriculumResult {
  std::vector<StageRecord> stages;
  double generalization_loss = 0.0;  // uniform over the full cube
  double target_coeff = 0.0;         // learned coefficient of the target's top monomial
  long total_steps = 0;
  bool diverged = false;
};

// Algorithm: stages over nested Hamming balls; stage i trains on the fixed
// sample set restricted to B_{r_i} until the stage loss drops below the
// threshold or the per-stage step budget runs out.
CurriculumResult run_curriculum(const std::vector<Point>& samples,
                                const std::vector<double>& labels,
                                const BooleanFunction& target,
                                const ModelSpec& spec,
                                const CurriculumSchedule& schedule,
                                const TrainConfig& config);

// Query-access variant: stage i draws fresh uniform samples from B_{r_i}.
CurriculumResult query_curriculum(const BooleanFunction& target,
                                  const ModelSpec& spec,
                                  const CurriculumSchedule& schedule,
                                  const std::vector<std::size_t>& stage_samples,
                                  const TrainConfig& config);

struct AbComparison {
  CurriculumResult curriculum;
  CurriculumResult plain;  // single-stage B_d arm with the same total budget
  std::size_t n_samples = 0;
};

// Both arms get bitwise-identical samples and initial weights; only the
// stage filter differs.
AbComparison ab_compare(int d, const BooleanFunction& target,
                        std::size_t n_samples, const ModelSpec& spec,
                        const CurriculumSchedule& schedule,
                        const TrainConfig& config);

// Exact uniform draw from the Hamming ball B_r: truncated-binomial weight,
// then a uniform subset of that size.
std::vector<Point> sample_ball(int d, int radius, std::size_t n,
                               std::uint64_t seed);

}  // namespace gotu
