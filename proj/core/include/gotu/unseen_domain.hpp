#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "gotu/boolean_function.hpp"
#include "gotu/rng.hpp"

namespace gotu {

// Holdout kinds. The unseen set U is what training never sees; the seen set
// is cube \ U.

// U = {x : x_coords = values}, the exact excluded pattern. The canonical
// holdout "x_k frozen to +1 at training" is FrozenPattern{{k}, {-1}}.
struct FrozenPattern {
  std::vector<int> coords;
  std::vector<int> values;  // +-1 each
};

// U = {x : chi_mask(x) = sign}.
struct ParityConstraint {
  Mask mask = 0;
  int sign = 1;
};

// U = {x : x_i = -x_j}; seen points satisfy x_i = x_j.
struct EqualityConstraint {
  int i = 0;
  int j = 0;
};

// Seen set is the Hamming ball B_r = {x : at most r coordinates equal -1}.
struct BallComplement {
  int radius = 0;
};

struct Explicit {
  std::vector<Point> points;  // the unseen points
};

struct VanishingGenerators {
  std::vector<BooleanFunction> gens;  // each vanishes on every seen point
};

class UnseenDomain {
 public:
  using Kind = std::variant<FrozenPattern, ParityConstraint, EqualityConstraint,
                            BallComplement, Explicit>;

  UnseenDomain(int dim, Kind kind);

  int dim() const { return dim_; }
  const Kind& kind() const { return kind_; }

  bool is_unseen(Point x) const;
  bool is_seen(Point x) const { return !is_unseen(x); }

  std::uint64_t seen_count() const;
  std::uint64_t unseen_count() const;

  // Ascending point order; requires dim <= kMaxDenseDim.
  std::vector<Point> enumerate_seen() const;
  std::vector<Point> enumerate_unseen() const;

  // i.i.d. uniform over the seen set, deterministic under the seed.
  std::vector<Point> sample_seen(std::size_t n, std::uint64_t seed) const;

  // Closed-form generators of the vanishing ideal of the seen set.
  // Throws UnsupportedDomain for Explicit.
  VanishingGenerators generators() const;

  // If U = {x : x_I in U*} for a small latent coordinate set I, returns true
  // and fills the latent mask and the latent unseen patterns (as points of
  // the |I|-dimensional cube, bits ordered by ascending coordinate).
  bool latent_structure(Mask* latent_mask, std::vector<Point>* latent_unseen) const;

  std::string describe() const;

 private:
  int dim_;
  Kind kind_;
};

}  // namespace gotu
