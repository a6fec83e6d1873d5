#include "maxent/moment_basis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace maxent {

std::string to_string(BasisFamily family) {
  switch (family) {
    case BasisFamily::powers: return "powers";
    case BasisFamily::exponentials: return "exponentials";
    case BasisFamily::tabulated: return "tabulated";
  }
  return "unknown";
}

MomentBasis MomentBasis::powers(std::vector<int> exponents) {
  if (exponents.empty()) throw ConfigError("basis: powers requires at least one exponent");
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (exponents[i] < 1) throw ConfigError("basis: power exponents must be positive integers");
    for (std::size_t j = 0; j < i; ++j) {
      if (exponents[j] == exponents[i]) throw ConfigError("basis: power exponents must be distinct");
    }
  }
  MomentBasis b;
  b.family_ = BasisFamily::powers;
  b.size_ = static_cast<int>(exponents.size());
  b.exponents_ = std::move(exponents);
  return b;
}

MomentBasis MomentBasis::exponentials(std::vector<double> alphas) {
  if (alphas.empty()) throw ConfigError("basis: exponentials requires at least one alpha");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] > 0.0) || !std::isfinite(alphas[i])) {
      throw ConfigError("basis: alphas must be positive and finite");
    }
    if (i > 0 && !(alphas[i] > alphas[i - 1])) {
      throw ConfigError("basis: alphas must be strictly increasing");
    }
  }
  MomentBasis b;
  b.family_ = BasisFamily::exponentials;
  b.size_ = static_cast<int>(alphas.size());
  b.alphas_ = std::move(alphas);
  return b;
}

MomentBasis MomentBasis::tabulated(std::vector<double> x,
                                   std::vector<std::vector<double>> values) {
  if (x.size() < 2) throw ConfigError("basis: tabulated requires at least two abscissas");
  if (values.empty()) throw ConfigError("basis: tabulated requires at least one function");
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw ConfigError("basis: tabulated abscissas must be strictly increasing");
  }
  for (const auto& row : values) {
    if (row.size() != x.size()) {
      throw ConfigError("basis: each tabulated function needs one value per abscissa");
    }
    for (double v : row) {
      if (!std::isfinite(v)) throw ConfigError("basis: tabulated values must be finite");
    }
  }
  MomentBasis b;
  b.family_ = BasisFamily::tabulated;
  b.size_ = static_cast<int>(values.size());
  b.table_x_ = std::move(x);
  b.table_values_ = std::move(values);
  return b;
}

void MomentBasis::eval_into(double x, Eigen::Ref<Vector> out) const {
  switch (family_) {
    case BasisFamily::powers:
      for (int k = 0; k < size_; ++k) out[k] = std::pow(x, exponents_[static_cast<std::size_t>(k)]);
      break;
    case BasisFamily::exponentials:
      for (int k = 0; k < size_; ++k) out[k] = std::exp(-alphas_[static_cast<std::size_t>(k)] * x);
      break;
    case BasisFamily::tabulated: {
      if (x < table_x_.front() || x > table_x_.back()) {
        throw InputError("basis: point " + std::to_string(x) +
                         " outside tabulated range");
      }
      auto it = std::upper_bound(table_x_.begin(), table_x_.end(), x);
      std::size_t hi = static_cast<std::size_t>(it - table_x_.begin());
      if (hi >= table_x_.size()) hi = table_x_.size() - 1;
      const std::size_t lo = hi - 1;
      const double t = (x - table_x_[lo]) / (table_x_[hi] - table_x_[lo]);
      for (int k = 0; k < size_; ++k) {
        const auto& row = table_values_[static_cast<std::size_t>(k)];
        out[k] = (1.0 - t) * row[lo] + t * row[hi];
      }
      break;
    }
  }
}

Vector MomentBasis::eval(double x) const {
  Vector h(size_);
  eval_into(x, h);
  return h;
}

Matrix MomentBasis::eval_many(std::span<const double> xs) const {
  Matrix h(static_cast<Eigen::Index>(xs.size()), size_);
  Vector row(size_);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    eval_into(xs[i], row);
    h.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return h;
}

namespace {

// Range of x^p over [lo, hi] (hi may be +inf).
std::pair<double, double> power_range(int p, double lo, double hi) {
  double vmin = std::min(std::pow(lo, p), std::pow(hi, p));
  const double vmax = std::max(std::pow(lo, p), std::pow(hi, p));
  if (p % 2 == 0 && lo < 0.0 && hi > 0.0) vmin = 0.0;
  return {vmin, vmax};
}

}  // namespace

void check_feasibility_screen(const MomentBasis& basis, const SupportSpec& support,
                              const MomentVector& d) {
  if (d.size() != basis.size()) {
    throw InputError("moments: expected " + std::to_string(basis.size()) +
                     " values, got " + std::to_string(d.size()));
  }
  for (int k = 0; k < d.size(); ++k) {
    if (!std::isfinite(d[k])) throw InputError("moments: d_k must be finite");
  }
  switch (basis.family()) {
    case BasisFamily::powers: {
      for (int k = 0; k < d.size(); ++k) {
        const auto [lo, hi] = power_range(basis.exponents()[static_cast<std::size_t>(k)],
                                          support.a, support.upper());
        if (!(d[k] > lo && d[k] < hi)) {
          std::ostringstream os;
          os << "moments: d_" << k + 1 << " = " << d[k]
             << " lies outside the open range (" << lo << ", " << hi
             << ") of h_" << k + 1 << " on the support";
          throw InfeasibleError(os.str());
        }
      }
      break;
    }
    case BasisFamily::exponentials: {
      const auto& alpha = basis.alphas();
      for (int k = 0; k < d.size(); ++k) {
        const double a = alpha[static_cast<std::size_t>(k)];
        const double hi = std::exp(-a * support.a);
        const double lo = std::exp(-a * support.upper());
        if (!(d[k] > lo && d[k] < hi)) {
          std::ostringstream os;
          os << "moments: d_" << k + 1 << " = " << d[k]
             << " lies outside the open range (" << lo << ", " << hi
             << ") of exp(-" << a << " x) on the support";
          throw InfeasibleError(os.str());
        }
        if (k > 0 && support.a >= 0.0 && !(d[k] < d[k - 1])) {
          throw InfeasibleError(
              "moments: Laplace transform values must decrease as alpha increases");
        }
      }
      break;
    }
    case BasisFamily::tabulated:
      break;
  }
}

SampleSet::SampleSet(std::vector<double> values, const SupportSpec& support,
                     std::uint64_t seed)
    : values_(std::move(values)), support_(support), seed_(seed) {
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!support_.contains(values_[i])) bad.push_back(i);
  }
  if (!bad.empty()) {
    std::ostringstream os;
    os << bad.size() << " sample value(s) outside the support"
       << ", rows (0-based):";
    for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 20); ++i) {
      os << ' ' << bad[i] << " (x = " << values_[bad[i]] << ')';
    }
    if (bad.size() > 20) os << " ...";
    throw OutOfSupportError(os.str(), std::move(bad));
  }
}

MomentVector estimate_moments(const MomentBasis& basis, const SampleSet& sample) {
  if (sample.size() == 0) throw InputError("estimate_moments: empty sample");
  Vector sum = Vector::Zero(basis.size());
  Vector h(basis.size());
  for (double x : sample.values()) {
    basis.eval_into(x, h);
    sum += h;
  }
  return MomentVector{sum / static_cast<double>(sample.size())};
}

Matrix sample_covariance(const MomentBasis& basis, const SampleSet& sample) {
  const std::size_t n = sample.size();
  if (n < 2) throw InputError("sample_covariance: need at least two observations");
  const Vector mean = estimate_moments(basis, sample).d;
  Matrix cov = Matrix::Zero(basis.size(), basis.size());
  Vector h(basis.size());
  for (double x : sample.values()) {
    basis.eval_into(x, h);
    h -= mean;
    cov.selfadjointView<Eigen::Lower>().rankUpdate(h);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  return cov / static_cast<double>(n - 1);
}

}  // namespace maxent
