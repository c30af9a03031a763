#include "gotu/boolean_function.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>

#include "gotu/errors.hpp"

namespace gotu {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

int log2_size(std::size_t n) {
  if (!is_power_of_two(n)) {
    throw InvalidInput("table length must be a power of two, got " +
                       std::to_string(n));
  }
  return std::countr_zero(n);
}

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDenseDim) {
    throw InvalidInput("dimension must be in [1, " +
                       std::to_string(kMaxDenseDim) + "], got " +
                       std::to_string(dim));
  }
}

}  // namespace

void wht_inplace(std::span<double> data) {
  const std::size_t n = data.size();
  log2_size(n);
  for (std::size_t len = 1; len < n; len <<= 1) {
    for (std::size_t block = 0; block < n; block += 2 * len) {
      for (std::size_t i = block; i < block + len; ++i) {
        const double u = data[i];
        const double v = data[i + len];
        data[i] = u + v;
        data[i + len] = u - v;
      }
    }
  }
}

std::vector<double> transform(std::vector<double> values) {
  const int d = log2_size(values.size());
  wht_inplace(values);
  const double scale = std::ldexp(1.0, -d);
  for (double& v : values) v *= scale;
  return values;
}

std::vector<double> inverse_transform(std::vector<double> coeffs) {
  log2_size(coeffs.size());
  wht_inplace(coeffs);
  return coeffs;
}

BooleanFunction BooleanFunction::from_values(int dim,
                                             std::vector<double> values) {
  check_dim(dim);
  if (values.size() != (std::size_t{1} << dim)) {
    throw InvalidInput("value table has length " +
                       std::to_string(values.size()) + ", expected 2^" +
                       std::to_string(dim));
  }
  auto data = std::make_shared<Data>();
  data->dim = dim;
  data->values = std::move(values);
  std::call_once(data->values_once, [] {});
  BooleanFunction f;
  f.data_ = std::move(data);
  return f;
}

BooleanFunction BooleanFunction::from_coeffs(int dim,
                                             std::vector<double> coeffs) {
  check_dim(dim);
  if (coeffs.size() != (std::size_t{1} << dim)) {
    throw InvalidInput("coefficient table has length " +
                       std::to_string(coeffs.size()) + ", expected 2^" +
                       std::to_string(dim));
  }
  auto data = std::make_shared<Data>();
  data->dim = dim;
  data->coeffs = std::move(coeffs);
  std::call_once(data->coeffs_once, [] {});
  BooleanFunction f;
  f.data_ = std::move(data);
  return f;
}

BooleanFunction BooleanFunction::from_sparse_coeffs(
    int dim, const std::vector<std::pair<Mask, double>>& terms) {
  check_dim(dim);
  std::vector<double> coeffs(std::size_t{1} << dim, 0.0);
  for (const auto& [mask, value] : terms) {
    if (mask >= coeffs.size()) {
      throw InvalidInput("coefficient mask out of range for dimension " +
                         std::to_string(dim));
    }
    coeffs[mask] += value;
  }
  return from_coeffs(dim, std::move(coeffs));
}

BooleanFunction BooleanFunction::zero(int dim) {
  check_dim(dim);
  return from_coeffs(dim, std::vector<double>(std::size_t{1} << dim, 0.0));
}

const std::vector<double>& BooleanFunction::values() const {
  std::call_once(data_->values_once, [this] {
    data_->values = inverse_transform(data_->coeffs);
  });
  return data_->values;
}

const std::vector<double>& BooleanFunction::coeffs() const {
  std::call_once(data_->coeffs_once,
                 [this] { data_->coeffs = transform(data_->values); });
  return data_->coeffs;
}

double BooleanFunction::eval_by_coeffs(Point x) const {
  const auto& c = coeffs();
  double acc = 0.0;
  for (Mask t = 0; t < c.size(); ++t) {
    if (c[t] != 0.0) acc += c[t] * chi(t, x);
  }
  return acc;
}

std::vector<std::pair<Mask, double>> BooleanFunction::sparse_coeffs(
    double eps) const {
  const auto& c = coeffs();
  std::vector<std::pair<Mask, double>> out;
  for (Mask t = 0; t < c.size(); ++t) {
    if (std::abs(c[t]) > eps) out.emplace_back(t, c[t]);
  }
  return out;
}

int BooleanFunction::degree(double eps) const {
  const auto& c = coeffs();
  int deg = 0;
  for (Mask t = 0; t < c.size(); ++t) {
    if (std::abs(c[t]) > eps) deg = std::max(deg, set_size(t));
  }
  return deg;
}

namespace {
BooleanFunction combine(const BooleanFunction& a, const BooleanFunction& b,
                        double sb) {
  if (a.dim() != b.dim()) {
    throw InvalidInput("dimension mismatch: " + std::to_string(a.dim()) +
                       " vs " + std::to_string(b.dim()));
  }
  std::vector<double> c = a.coeffs();
  const auto& cb = b.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += sb * cb[i];
  return BooleanFunction::from_coeffs(a.dim(), std::move(c));
}
}  // namespace

BooleanFunction operator+(const BooleanFunction& a, const BooleanFunction& b) {
  return combine(a, b, 1.0);
}

BooleanFunction operator-(const BooleanFunction& a, const BooleanFunction& b) {
  return combine(a, b, -1.0);
}

BooleanFunction operator*(double s, const BooleanFunction& f) {
  std::vector<double> c = f.coeffs();
  for (double& v : c) v *= s;
  return BooleanFunction::from_coeffs(f.dim(), std::move(c));
}

double DegreeProfile::total() const {
  double acc = 0.0;
  for (double m : mass) acc += m;
  return acc;
}

DegreeProfile degree_profile(const BooleanFunction& f) {
  const auto& c = f.coeffs();
  DegreeProfile p;
  p.dim = f.dim();
  p.mass.assign(f.dim() + 1, 0.0);
  for (Mask t = 0; t < c.size(); ++t) {
    p.mass[f.dim() - set_size(t)] += c[t] * c[t];
  }
  return p;
}

int lex_compare(const DegreeProfile& a, const DegreeProfile& b) {
  if (a.dim != b.dim) {
    throw InvalidInput("degree-profile dimension mismatch");
  }
  for (std::size_t i = 0; i < a.mass.size(); ++i) {
    if (a.mass[i] < b.mass[i]) return -1;
    if (a.mass[i] > b.mass[i]) return 1;
  }
  return 0;
}

double influence(const BooleanFunction& f, int k) {
  if (k < 0 || k >= f.dim()) {
    throw InvalidInput("coordinate index out of range");
  }
  const auto& c = f.coeffs();
  const Mask bit = Mask{1} << k;
  double acc = 0.0;
  for (Mask t = 0; t < c.size(); ++t) {
    if (t & bit) acc += c[t] * c[t];
  }
  return acc;
}

double gotu_loss(const BooleanFunction& target, const BooleanFunction& model,
                 std::span<const Point> points) {
  if (target.dim() != model.dim()) {
    throw InvalidInput("dimension mismatch between target and model");
  }
  if (points.empty()) {
    throw InvalidInput("holdout point set is empty");
  }
  const auto& vt = target.values();
  const auto& vm = model.values();
  double acc = 0.0;
  for (Point x : points) {
    const double e = vm[x] - vt[x];
    acc += e * e;
  }
  return acc / static_cast<double>(points.size());
}

BooleanFunction make_parity(int dim, Mask t) {
  check_dim(dim);
  if (t >= (Mask{1} << dim)) {
    throw InvalidInput("parity mask out of range for dimension " +
                       std::to_string(dim));
  }
  return BooleanFunction::from_sparse_coeffs(dim, {{t, 1.0}});
}

BooleanFunction make_majority(int dim, const std::vector<int>& coords) {
  check_dim(dim);
  if (coords.empty() || coords.size() % 2 == 0) {
    throw InvalidInput("majority needs an odd number of coordinates");
  }
  Mask seen = 0;
  for (int c : coords) {
    if (c < 0 || c >= dim) throw InvalidInput("majority coordinate out of range");
    const Mask bit = Mask{1} << c;
    if (seen & bit) throw InvalidInput("majority coordinates must be distinct");
    seen |= bit;
  }
  // Exact coefficients via the transform on the latent cube; values are +-1
  // and 2^-m scaling is dyadic, so the doubles are exact.
  const int m = static_cast<int>(coords.size());
  std::vector<double> latent(std::size_t{1} << m);
  for (Point p = 0; p < latent.size(); ++p) {
    int sum = 0;
    for (int j = 0; j < m; ++j) sum += ((p >> j) & 1u) ? -1 : 1;
    latent[p] = sum > 0 ? 1.0 : -1.0;
  }
  latent = transform(std::move(latent));
  std::vector<std::pair<Mask, double>> terms;
  for (Mask s = 0; s < latent.size(); ++s) {
    if (latent[s] == 0.0) continue;
    Mask lifted = 0;
    for (int j = 0; j < m; ++j) {
      if ((s >> j) & 1u) lifted |= Mask{1} << coords[j];
    }
    terms.emplace_back(lifted, latent[s]);
  }
  return BooleanFunction::from_sparse_coeffs(dim, terms);
}

NamedTarget named_target_from_string(const std::string& name) {
  if (name == "f1") return NamedTarget::F1;
  if (name == "f2") return NamedTarget::F2;
  if (name == "f3") return NamedTarget::F3;
  if (name == "f4") return NamedTarget::F4;
  throw InvalidInput("unknown named target '" + name + "'");
}

std::string to_string(NamedTarget t) {
  switch (t) {
    case NamedTarget::F1: return "f1";
    case NamedTarget::F2: return "f2";
    case NamedTarget::F3: return "f3";
    case NamedTarget::F4: return "f4";
  }
  return "?";
}

BooleanFunction make_named(NamedTarget which, int dim) {
  check_dim(dim);
  auto need = [&](int min_dim) {
    if (dim < min_dim) {
      throw InvalidInput("target " + to_string(which) + " needs dimension >= " +
                         std::to_string(min_dim));
    }
  };
  switch (which) {
    case NamedTarget::F1: {
      need(3);
      return BooleanFunction::from_sparse_coeffs(
          dim, {{0b011, 1.0}, {0b110, -1.25}, {0b101, 1.5}});
    }
    case NamedTarget::F2: {
      need(2);
      return BooleanFunction::from_sparse_coeffs(dim, {{0b11, 1.0}});
    }
    case NamedTarget::F3: {
      // 15 cyclic degree-3 terms x_i x_{i+1} x_{i+2} over coordinates 0..14.
      need(15);
      std::vector<std::pair<Mask, double>> terms;
      for (int i = 0; i < 15; ++i) {
        const Mask t = (Mask{1} << i) | (Mask{1} << ((i + 1) % 15)) |
                       (Mask{1} << ((i + 2) % 15));
        terms.emplace_back(t, 1.0);
      }
      return BooleanFunction::from_sparse_coeffs(dim, terms);
    }
    case NamedTarget::F4: {
      need(3);
      return make_majority(dim, {0, 1, 2});
    }
  }
  throw InvalidInput("unknown named target");
}

std::string to_json(const BooleanFunction& f) {
  std::string out = "{\"dim\":" + std::to_string(f.dim()) + ",\"coeffs\":[";
  bool first = true;
  char buf[64];
  for (const auto& [mask, value] : f.sparse_coeffs()) {
    if (!first) out += ',';
    first = false;
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    out += "[" + std::to_string(mask) + "," + buf + "]";
  }
  out += "]}";
  return out;
}

BooleanFunction boolean_function_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.is_object() || !j.contains("dim") || !j.contains("coeffs")) {
    throw InvalidInput("expected {dim, coeffs} object");
  }
  const int dim = j["dim"].get<int>();
  std::vector<std::pair<Mask, double>> terms;
  for (const auto& entry : j["coeffs"]) {
    if (!entry.is_array() || entry.size() != 2) {
      throw InvalidInput("coeffs entries must be [mask, value] pairs");
    }
    terms.emplace_back(entry[0].get<Mask>(), entry[1].get<double>());
  }
  return BooleanFunction::from_sparse_coeffs(dim, terms);
}

}  // namespace gotu
