#pragma once

#include <cstdint>
#include <string>

namespace gotu {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunOutcome {
  int exit_code = 0;       // 0 ok, 2 spec violation, 3 I/O failure
  std::string message;     // path-scoped error text when exit_code != 0
  bool partial_failure = false;  // some seeds diverged; recorded, not fatal
  std::string out_dir;
  std::string stdout_payload;  // printed by the CLI (md-solve, length-gen)
};

// Validates and executes an ExperimentSpec JSON document. Results are written
// under the spec's out_dir (atomically: temp file + rename); max_threads caps
// the per-seed worker pool.
RunOutcome run_experiment_json(const std::string& spec_text, int max_threads);

// Desk-scale reproduction bundles for the in-scope figures
// (fig1..fig5, fig6, fig7, fig9). Unknown or out-of-scope figures exit 2.
RunOutcome reproduce_figure(const std::string& figure, const std::string& out_dir,
                            bool paper_scale, int max_threads);

// The published spec schema document.
std::string experiment_schema_json();

// Compact "kind:params" domain syntax used by the CLI, e.g.
// "parity:x0x1x2=-1", "pattern:x0=-1,x1=-1", "equality:x1=-x2",
// "ball:r=2", "none". Returns a JSON object string.
std::string parse_domain_shorthand(const std::string& text);

std::uint64_t fnv1a_hash(const std::string& bytes);

}  // namespace gotu
