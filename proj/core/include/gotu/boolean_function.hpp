#pragma once

#include <bit>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gotu {

// Subset of coordinates: bit i set <=> coordinate i belongs to the set T.
using Mask = std::uint64_t;

// Point of the cube {+-1}^d: bit i set <=> x_i = -1, so index 0 is the
// all-ones point. This convention is fixed project-wide.
using Point = std::uint64_t;

inline int set_size(Mask t) { return std::popcount(t); }

// chi_T(x) = prod_{i in T} x_i
inline double chi(Mask t, Point x) {
  return (std::popcount(t & x) & 1) ? -1.0 : 1.0;
}

inline double coordinate(Point x, int i) {
  return ((x >> i) & 1u) ? -1.0 : 1.0;
}

// Largest dimension stored densely (2^25 doubles ~ 256 MB).
inline constexpr int kMaxDenseDim = 25;

// Unnormalized Walsh-Hadamard butterfly; applying it twice multiplies by 2^d.
void wht_inplace(std::span<double> data);

// Point values -> Fourier coefficients, coeffs[T] = 2^-d sum_x chi_T(x) v[x].
std::vector<double> transform(std::vector<double> values);

// Fourier coefficients -> point values (the unnormalized butterfly).
std::vector<double> inverse_transform(std::vector<double> coeffs);

// Real-valued function on the cube, immutable after construction. Stores the
// point-value table and derives the coefficient table lazily (or vice versa);
// copies share storage.
class BooleanFunction {
 public:
  BooleanFunction() = default;

  static BooleanFunction from_values(int dim, std::vector<double> values);
  static BooleanFunction from_coeffs(int dim, std::vector<double> coeffs);
  static BooleanFunction from_sparse_coeffs(
      int dim, const std::vector<std::pair<Mask, double>>& terms);
  static BooleanFunction zero(int dim);

  int dim() const { return data_->dim; }
  std::size_t size() const { return std::size_t{1} << data_->dim; }

  const std::vector<double>& values() const;
  const std::vector<double>& coeffs() const;

  double value_at(Point x) const { return values()[x]; }
  double coeff(Mask t) const { return coeffs()[t]; }

  // Direct sum over the coefficient table; slow path used to cross-check eval.
  double eval_by_coeffs(Point x) const;

  // Nonzero coefficients in ascending mask order.
  std::vector<std::pair<Mask, double>> sparse_coeffs(double eps = 0.0) const;

  int degree(double eps = 0.0) const;

  bool valid() const { return data_ != nullptr; }

 private:
  struct Data {
    int dim = 0;
    mutable std::vector<double> values;
    mutable std::vector<double> coeffs;
    mutable std::once_flag values_once;
    mutable std::once_flag coeffs_once;
  };
  std::shared_ptr<const Data> data_;
};

BooleanFunction operator+(const BooleanFunction& a, const BooleanFunction& b);
BooleanFunction operator-(const BooleanFunction& a, const BooleanFunction& b);
BooleanFunction operator*(double s, const BooleanFunction& f);

// Per-degree Fourier mass, stored top degree first: mass[j] holds the total
// squared coefficient mass on degree d-j monomials, so lexicographic
// comparison is a plain left-to-right scan.
struct DegreeProfile {
  int dim = 0;
  std::vector<double> mass;  // length dim + 1
  double total() const;
};

DegreeProfile degree_profile(const BooleanFunction& f);

// -1, 0, +1; first strict difference scanning from the top degree decides.
int lex_compare(const DegreeProfile& a, const DegreeProfile& b);

// Boolean influence of coordinate k: sum over T containing k of coeff(T)^2.
double influence(const BooleanFunction& f, int k);

// Mean squared error over the given (non-empty) point set.
double gotu_loss(const BooleanFunction& target, const BooleanFunction& model,
                 std::span<const Point> points);

BooleanFunction make_parity(int dim, Mask t);
BooleanFunction make_majority(int dim, const std::vector<int>& coords);

enum class NamedTarget { F1, F2, F3, F4 };
NamedTarget named_target_from_string(const std::string& name);
std::string to_string(NamedTarget t);
BooleanFunction make_named(NamedTarget which, int dim);

// JSON form: {"dim": d, "coeffs": [[mask, value], ...]} with masks ascending
// and values printed with 17 significant digits.
std::string to_json(const BooleanFunction& f);
BooleanFunction boolean_function_from_json(const std::string& text);

}  // namespace gotu
