#pragma once

#include <string_view>
#include <vector>

namespace qcp {

enum class Filter { dirichlet, raised_cosine };
enum class CoeffMode { exact_finite_n, analytic_large_n };

std::string_view to_string(Filter f);
std::string_view to_string(CoeffMode m);
Filter parse_filter(std::string_view s);
CoeffMode parse_coeff_mode(std::string_view s);

/// Range truncation of the counterdiabatic expansion. A cutoff of 0 means no
/// auxiliary driving; a cutoff of N/2 is the complete expansion, in which the
/// range-N/2 term carries weight 1/2.
struct CdConfig {
  int cutoff = 0;
  Filter filter = Filter::dirichlet;
  CoeffMode coeff_mode = CoeffMode::exact_finite_n;

  bool half_weight_last(int n_sites) const { return cutoff == n_sites / 2; }
  // Throws ConfigError unless 0 <= cutoff <= N/2 for a valid even N.
  void validate(int n_sites) const;
};

/// h_m(g) = (1/N) sum_{k in k+} f(k) sin(mk) by direct compensated summation
/// over the positive half of the anti-periodic grid.
/// Throws std::out_of_range unless 1 <= m <= N/2.
double h_m_exact(int m, double g, int n_sites);

/// Same quantity as h_m_exact in closed form,
/// (g^(m-1) + g^(N-m-1)) / (8 (1 + g^N)), rescaled by 1/g for |g| > 1.
double h_m_closed_form(int m, double g, int n_sites);

/// Large-N limit: g^(m-1)/8 for |g| <= 1, g^(-m-1)/8 for |g| > 1.
double h_m_analytic(int m, double g);

/// Dirichlet: 1. Raised cosine: (1 + cos(m pi / M)) / 2.
/// Throws std::out_of_range unless 1 <= m <= M.
double filter_weight(Filter kind, int m, int cutoff);

/// Truncated momentum kernel F_M(k) = sum_{m<=M} s_m h_m(g) sin(mk) (the
/// range-N/2 term halved) for one fixed momentum. The weights s_m sin(mk) are
/// precomputed, so each evaluation in g costs O(M) with no allocation.
class TruncatedKernel {
 public:
  TruncatedKernel(double k, const CdConfig& cfg, int n_sites);

  double operator()(double g) const;
  int cutoff() const { return static_cast<int>(weights_.size()); }

 private:
  // sum_m w_m x^(m-1) and sum_m w_m x^(M-m) by Horner.
  double ascending(double x) const;
  double descending(double x) const;

  std::vector<double> weights_;
  CoeffMode mode_;
  int n_sites_;
};

double truncated_kernel(double k, double g, const CdConfig& cfg, int n_sites);

}  // namespace qcp
