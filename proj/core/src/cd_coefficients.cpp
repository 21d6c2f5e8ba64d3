#include "qcp/cd_coefficients.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qcp/errors.hpp"
#include "qcp/ising_momentum.hpp"

namespace qcp {

std::string_view to_string(Filter f) { return f == Filter::dirichlet ? "dirichlet" : "raised_cosine"; }

std::string_view to_string(CoeffMode m) { return m == CoeffMode::exact_finite_n ? "exact" : "analytic"; }

Filter parse_filter(std::string_view s) {
  if (s == "dirichlet") return Filter::dirichlet;
  if (s == "raised-cosine" || s == "raised_cosine") return Filter::raised_cosine;
  throw ConfigError("unknown filter '" + std::string(s) + "' (expected dirichlet or raised-cosine)");
}

CoeffMode parse_coeff_mode(std::string_view s) {
  if (s == "exact") return CoeffMode::exact_finite_n;
  if (s == "analytic") return CoeffMode::analytic_large_n;
  throw ConfigError("unknown coefficient mode '" + std::string(s) + "' (expected exact or analytic)");
}

void CdConfig::validate(int n_sites) const {
  if (n_sites < 2 || n_sites % 2 != 0) throw ConfigError("chain length must be even and >= 2");
  if (cutoff < 0 || cutoff > n_sites / 2) {
    throw ConfigError("cutoff " + std::to_string(cutoff) + " outside [0, " + std::to_string(n_sites / 2) + "]");
  }
}

namespace {

void require_range(int m, int n_sites) {
  if (n_sites < 2 || n_sites % 2 != 0) throw std::invalid_argument("chain length must be even and >= 2");
  if (m < 1 || m > n_sites / 2) {
    throw std::out_of_range("range m=" + std::to_string(m) + " outside [1, " + std::to_string(n_sites / 2) + "]");
  }
}

}  // namespace

double h_m_exact(int m, double g, int n_sites) {
  require_range(m, n_sites);
  // Neumaier summation in ascending k.
  double sum = 0.0;
  double comp = 0.0;
  for (double k : momentum_grid(n_sites)) {
    const double term = cd_kernel_exact(k, g) * std::sin(m * k);
    const double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return 2.0 * (sum + comp) / n_sites;
}

double h_m_closed_form(int m, double g, int n_sites) {
  require_range(m, n_sites);
  if (std::abs(g) <= 1.0) {
    return (std::pow(g, m - 1) + std::pow(g, n_sites - m - 1)) / (8.0 * (1.0 + std::pow(g, n_sites)));
  }
  const double r = 1.0 / g;
  return (std::pow(r, m + 1) + std::pow(r, n_sites - m + 1)) / (8.0 * (1.0 + std::pow(r, n_sites)));
}

double h_m_analytic(int m, double g) {
  if (m < 1) throw std::out_of_range("range m must be >= 1");
  if (std::abs(g) <= 1.0) return std::pow(g, m - 1) / 8.0;
  return std::pow(g, -m - 1) / 8.0;
}

double filter_weight(Filter kind, int m, int cutoff) {
  if (m < 1 || m > cutoff) {
    throw std::out_of_range("filter index m=" + std::to_string(m) + " outside [1, " + std::to_string(cutoff) + "]");
  }
  if (kind == Filter::dirichlet) return 1.0;
  return 0.5 * (1.0 + std::cos(m * std::numbers::pi / cutoff));
}

TruncatedKernel::TruncatedKernel(double k, const CdConfig& cfg, int n_sites)
    : mode_(cfg.coeff_mode), n_sites_(n_sites) {
  cfg.validate(n_sites);
  weights_.resize(static_cast<std::size_t>(cfg.cutoff));
  for (int m = 1; m <= cfg.cutoff; ++m) {
    double w = filter_weight(cfg.filter, m, cfg.cutoff) * std::sin(m * k);
    if (2 * m == n_sites) w *= 0.5;
    weights_[static_cast<std::size_t>(m - 1)] = w;
  }
}

double TruncatedKernel::ascending(double x) const {
  double acc = 0.0;
  for (auto it = weights_.rbegin(); it != weights_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double TruncatedKernel::descending(double x) const {
  double acc = 0.0;
  for (double w : weights_) acc = acc * x + w;
  return acc;
}

double TruncatedKernel::operator()(double g) const {
  const int cutoff = this->cutoff();
  if (cutoff == 0) return 0.0;
  const bool inside = std::abs(g) <= 1.0;
  const double x = inside ? g : 1.0 / g;
  if (mode_ == CoeffMode::analytic_large_n) {
    const double p = ascending(x);
    return inside ? p / 8.0 : x * x * p / 8.0;
  }
  const double tail = std::pow(x, n_sites_ - cutoff + (inside ? -1 : 1)) * descending(x);
  const double head = inside ? ascending(x) : x * x * ascending(x);
  return (head + tail) / (8.0 * (1.0 + std::pow(x, n_sites_)));
}

double truncated_kernel(double k, double g, const CdConfig& cfg, int n_sites) {
  return TruncatedKernel(k, cfg, n_sites)(g);
}

}  // namespace qcp
