#include "gotu/unseen_domain.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "gotu/errors.hpp"

namespace gotu {

namespace {

std::uint64_t ball_size(int dim, int radius) {
  if (radius >= dim) return std::uint64_t{1} << dim;
  std::uint64_t total = 0;
  std::uint64_t binom = 1;  // C(dim, 0)
  for (int j = 0; j <= radius; ++j) {
    total += binom;
    binom = binom * static_cast<std::uint64_t>(dim - j) /
            static_cast<std::uint64_t>(j + 1);
  }
  return total;
}

}  // namespace

UnseenDomain::UnseenDomain(int dim, Kind kind)
    : dim_(dim), kind_(std::move(kind)) {
  if (dim_ < 1 || dim_ > 62) {
    throw InvalidInput("domain dimension must be in [1, 62]");
  }
  if (auto* fp = std::get_if<FrozenPattern>(&kind_)) {
    if (fp->coords.empty() || fp->coords.size() != fp->values.size()) {
      throw InvalidInput("frozen pattern needs matched, non-empty coords/values");
    }
    // canonical order: ascending coordinate
    std::vector<std::size_t> idx(fp->coords.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return fp->coords[a] < fp->coords[b]; });
    FrozenPattern sorted;
    for (std::size_t i : idx) {
      const int c = fp->coords[i];
      const int v = fp->values[i];
      if (c < 0 || c >= dim_) throw InvalidInput("frozen coordinate out of range");
      if (v != 1 && v != -1) throw InvalidInput("frozen values must be +-1");
      if (!sorted.coords.empty() && sorted.coords.back() == c) {
        throw InvalidInput("frozen coordinates must be distinct");
      }
      sorted.coords.push_back(c);
      sorted.values.push_back(v);
    }
    *fp = std::move(sorted);
  } else if (auto* pc = std::get_if<ParityConstraint>(&kind_)) {
    if (pc->mask == 0 || pc->mask >= (Mask{1} << dim_)) {
      throw InvalidInput("parity constraint needs a nonzero in-range mask");
    }
    if (pc->sign != 1 && pc->sign != -1) {
      throw InvalidInput("parity sign must be +-1");
    }
  } else if (auto* eq = std::get_if<EqualityConstraint>(&kind_)) {
    if (eq->i < 0 || eq->i >= dim_ || eq->j < 0 || eq->j >= dim_ || eq->i == eq->j) {
      throw InvalidInput("equality constraint needs two distinct in-range coords");
    }
  } else if (auto* bc = std::get_if<BallComplement>(&kind_)) {
    if (bc->radius < 0) throw InvalidInput("ball radius must be >= 0");
  } else if (auto* ex = std::get_if<Explicit>(&kind_)) {
    for (Point p : ex->points) {
      if (p >= (Point{1} << dim_)) throw InvalidInput("explicit point out of range");
    }
    std::sort(ex->points.begin(), ex->points.end());
    ex->points.erase(std::unique(ex->points.begin(), ex->points.end()),
                     ex->points.end());
    if (ex->points.size() == (std::uint64_t{1} << dim_)) {
      throw InvalidInput("explicit holdout leaves the seen set empty");
    }
  }
}

bool UnseenDomain::is_unseen(Point x) const {
  return std::visit(
      [&](const auto& k) -> bool {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, FrozenPattern>) {
          for (std::size_t i = 0; i < k.coords.size(); ++i) {
            const bool bit = (x >> k.coords[i]) & 1u;
            if (bit != (k.values[i] == -1)) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, ParityConstraint>) {
          return chi(k.mask, x) == static_cast<double>(k.sign);
        } else if constexpr (std::is_same_v<T, EqualityConstraint>) {
          return (((x >> k.i) ^ (x >> k.j)) & 1u) != 0;
        } else if constexpr (std::is_same_v<T, BallComplement>) {
          return std::popcount(x) > k.radius;
        } else {
          return std::binary_search(k.points.begin(), k.points.end(), x);
        }
      },
      kind_);
}

std::uint64_t UnseenDomain::seen_count() const {
  const std::uint64_t cube = std::uint64_t{1} << dim_;
  return std::visit(
      [&](const auto& k) -> std::uint64_t {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, FrozenPattern>) {
          return cube - (cube >> k.coords.size());
        } else if constexpr (std::is_same_v<T, ParityConstraint>) {
          return cube / 2;
        } else if constexpr (std::is_same_v<T, EqualityConstraint>) {
          return cube / 2;
        } else if constexpr (std::is_same_v<T, BallComplement>) {
          return ball_size(dim_, k.radius);
        } else {
          return cube - k.points.size();
        }
      },
      kind_);
}

std::uint64_t UnseenDomain::unseen_count() const {
  return (std::uint64_t{1} << dim_) - seen_count();
}

std::vector<Point> UnseenDomain::enumerate_seen() const {
  if (dim_ > kMaxDenseDim) {
    throw BudgetError("enumeration requires dimension <= " +
                      std::to_string(kMaxDenseDim));
  }
  if (seen_count() == 0) throw InvalidInput("seen set is empty");
  std::vector<Point> out;
  out.reserve(seen_count());
  const Point cube = Point{1} << dim_;
  for (Point p = 0; p < cube; ++p) {
    if (!is_unseen(p)) out.push_back(p);
  }
  return out;
}

std::vector<Point> UnseenDomain::enumerate_unseen() const {
  if (dim_ > kMaxDenseDim) {
    throw BudgetError("enumeration requires dimension <= " +
                      std::to_string(kMaxDenseDim));
  }
  std::vector<Point> out;
  out.reserve(unseen_count());
  const Point cube = Point{1} << dim_;
  for (Point p = 0; p < cube; ++p) {
    if (is_unseen(p)) out.push_back(p);
  }
  return out;
}

std::vector<Point> UnseenDomain::sample_seen(std::size_t n,
                                             std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<Point> out;
  out.reserve(n);
  const Point mask = (dim_ == 62) ? ((Point{1} << 62) - 1)
                                  : ((Point{1} << dim_) - 1);
  if (const auto* bc = std::get_if<BallComplement>(&kind_)) {
    // Exact: Hamming weight from the truncated binomial, then a uniform subset.
    const int r = std::min(bc->radius, dim_);
    std::vector<double> cum(r + 1);
    double binom = 1.0, total = 0.0;
    for (int j = 0; j <= r; ++j) {
      total += binom;
      cum[j] = total;
      binom = binom * static_cast<double>(dim_ - j) / static_cast<double>(j + 1);
    }
    std::vector<int> coords(dim_);
    for (std::size_t s = 0; s < n; ++s) {
      const double u = rng.uniform() * total;
      int weight = 0;
      while (weight < r && u > cum[weight]) ++weight;
      std::iota(coords.begin(), coords.end(), 0);
      Point p = 0;
      for (int j = 0; j < weight; ++j) {
        const auto pick = static_cast<std::size_t>(
            rng.integer(static_cast<std::uint64_t>(dim_ - j)));
        p |= Point{1} << coords[pick];
        std::swap(coords[pick], coords[dim_ - 1 - j]);
      }
      out.push_back(p);
    }
    return out;
  }
  if (const auto* ex = std::get_if<Explicit>(&kind_)) {
    const auto seen = enumerate_seen();
    for (std::size_t s = 0; s < n; ++s) {
      out.push_back(seen[rng.integer(seen.size())]);
    }
    return out;
  }
  // Rejection from the uniform cube; acceptance probability is >= 1/2 for the
  // frozen-pattern, parity and equality kinds.
  while (out.size() < n) {
    const Point p = rng.bits() & mask;
    if (!is_unseen(p)) out.push_back(p);
  }
  return out;
}

VanishingGenerators UnseenDomain::generators() const {
  VanishingGenerators out;
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, FrozenPattern>) {
          // prod_j (x_{c_j} + v_j) vanishes exactly when some x_{c_j} != v_j,
          // i.e. on every seen point; leading coefficient +1.
          const std::size_t m = k.coords.size();
          std::vector<std::pair<Mask, double>> terms;
          for (Mask s = 0; s < (Mask{1} << m); ++s) {
            Mask lifted = 0;
            double c = 1.0;
            for (std::size_t j = 0; j < m; ++j) {
              if ((s >> j) & 1u) {
                lifted |= Mask{1} << k.coords[j];
              } else {
                c *= k.values[j];
              }
            }
            terms.emplace_back(lifted, c);
          }
          out.gens.push_back(BooleanFunction::from_sparse_coeffs(dim_, terms));
        } else if constexpr (std::is_same_v<T, ParityConstraint>) {
          // seen satisfies chi_mask = -sign, so chi_mask + sign vanishes there
          out.gens.push_back(BooleanFunction::from_sparse_coeffs(
              dim_, {{k.mask, 1.0}, {Mask{0}, static_cast<double>(k.sign)}}));
        } else if constexpr (std::is_same_v<T, EqualityConstraint>) {
          out.gens.push_back(BooleanFunction::from_sparse_coeffs(
              dim_, {{Mask{1} << k.i, 1.0}, {Mask{1} << k.j, -1.0}}));
        } else if constexpr (std::is_same_v<T, BallComplement>) {
          // all prod_{i in T}(x_i - 1) with |T| = r + 1
          const int r1 = k.radius + 1;
          if (r1 > dim_) return;  // U empty, no generators needed
          std::vector<int> sel(r1);
          std::iota(sel.begin(), sel.end(), 0);
          while (true) {
            std::vector<std::pair<Mask, double>> terms;
            for (Mask s = 0; s < (Mask{1} << r1); ++s) {
              Mask lifted = 0;
              int ones = 0;
              for (int j = 0; j < r1; ++j) {
                if ((s >> j) & 1u) {
                  lifted |= Mask{1} << sel[j];
                  ++ones;
                }
              }
              terms.emplace_back(lifted, ((r1 - ones) % 2) ? -1.0 : 1.0);
            }
            out.gens.push_back(BooleanFunction::from_sparse_coeffs(dim_, terms));
            int pos = r1 - 1;
            while (pos >= 0 && sel[pos] == dim_ - r1 + pos) --pos;
            if (pos < 0) break;
            ++sel[pos];
            for (int q = pos + 1; q < r1; ++q) sel[q] = sel[q - 1] + 1;
          }
        } else {
          throw UnsupportedDomain(
              "explicit holdouts have no closed-form generators");
        }
      },
      kind_);
  return out;
}

bool UnseenDomain::latent_structure(Mask* latent_mask,
                                    std::vector<Point>* latent_unseen) const {
  return std::visit(
      [&](const auto& k) -> bool {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, FrozenPattern>) {
          Mask lm = 0;
          Point pattern = 0;
          for (std::size_t j = 0; j < k.coords.size(); ++j) {
            lm |= Mask{1} << k.coords[j];
            if (k.values[j] == -1) pattern |= Point{1} << j;
          }
          *latent_mask = lm;
          *latent_unseen = {pattern};
          return true;
        } else if constexpr (std::is_same_v<T, ParityConstraint>) {
          const int kbits = set_size(k.mask);
          if (kbits > 20) return false;
          *latent_mask = k.mask;
          latent_unseen->clear();
          const bool odd = (k.sign == -1);
          for (Point y = 0; y < (Point{1} << kbits); ++y) {
            if ((std::popcount(y) % 2 == 1) == odd) latent_unseen->push_back(y);
          }
          return true;
        } else if constexpr (std::is_same_v<T, EqualityConstraint>) {
          *latent_mask = (Mask{1} << k.i) | (Mask{1} << k.j);
          *latent_unseen = {Point{0b01}, Point{0b10}};
          return true;
        } else {
          return false;
        }
      },
      kind_);
}

std::string UnseenDomain::describe() const {
  return std::visit(
      [&](const auto& k) -> std::string {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, FrozenPattern>) {
          std::string s = "pattern{";
          for (std::size_t j = 0; j < k.coords.size(); ++j) {
            if (j) s += ',';
            s += "x" + std::to_string(k.coords[j]) + "=" +
                 (k.values[j] == 1 ? "+1" : "-1");
          }
          return s + "}";
        } else if constexpr (std::is_same_v<T, ParityConstraint>) {
          std::string s = "parity{";
          for (int i = 0; i < dim_; ++i) {
            if ((k.mask >> i) & 1u) s += "x" + std::to_string(i);
          }
          return s + "=" + (k.sign == 1 ? "+1" : "-1") + "}";
        } else if constexpr (std::is_same_v<T, EqualityConstraint>) {
          return "equality{x" + std::to_string(k.i) + "=-x" +
                 std::to_string(k.j) + "}";
        } else if constexpr (std::is_same_v<T, BallComplement>) {
          return "ball_complement{r=" + std::to_string(k.radius) + "}";
        } else {
          return "explicit{" + std::to_string(k.points.size()) + " points}";
        }
      },
      kind_);
}

}  // namespace gotu
