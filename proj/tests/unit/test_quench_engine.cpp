#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qcp/errors.hpp"
#include "qcp/quench_engine.hpp"
#include "qcp/two_level.hpp"

using namespace qcp;
using doctest::Approx;
using std::numbers::pi;

namespace {

DriverConfig full_cd(int n) { return DriverConfig{Composition::h0_plus_h1, CdConfig{n / 2}}; }
DriverConfig bare() { return DriverConfig{Composition::h0_only, CdConfig{}}; }

}  // namespace

TEST_SUITE("quench_engine") {

TEST_CASE("protocol") {
  const QuenchProtocol p(10, 0, 50);
  CHECK(p.t_start() == Approx(-9.0 / 50));
  CHECK(p.field_at(p.t_start()) == 10.0);
  CHECK(p.field_at(p.t_end()) == 0.0);
  CHECK(p.crosses_critical_point());
  CHECK_FALSE(QuenchProtocol(0.9, 0.1, 1).crosses_critical_point());
  CHECK_THROWS_AS(QuenchProtocol(10, 0, 0), ConfigError);
  CHECK_THROWS_AS(QuenchProtocol(0, 10, 1), ConfigError);
  CHECK_THROWS_AS(QuenchProtocol(NAN, 0, 1), ConfigError);
  CHECK(parse_composition("h1_only") == Composition::h1_only);
  CHECK_THROWS_AS(parse_composition("both"), ConfigError);
}

TEST_CASE("excitation probability of eigenstates") {
  CHECK(excitation_probability(mode_ground_state(0.4, 0.3), 0.4, 0.3) < 1e-30);
  CHECK(excitation_probability(mode_excited_state(0.4, 0.3), 0.4, 0.3) == Approx(1.0));
}

TEST_CASE("exact CD drives every mode to the final ground state") {
  const int n = 40;
  const QuenchProtocol p(10, 0, 50);
  for (double k : momentum_grid(n)) {
    const ModeState s = evolve_mode(k, p, full_cd(n), n, 1e-10);
    CAPTURE(k);
    CHECK(1.0 - fidelity(mode_ground_state(k, 0).amplitudes, s.amplitudes) <= 1e-8);
  }
}

TEST_CASE("exact CD is transitionless at every sampled time") {
  const int n = 12;
  const double tol = 1e-10;
  for (double rate : {0.1, 1.0, 10.0, 50.0}) {
    const QuenchProtocol p(10, 0, rate);
    for (double k : momentum_grid(n)) {
      for (const auto& s : track_mode(k, p, full_cd(n), n, tol, 40)) {
        CAPTURE(rate);
        CAPTURE(k);
        CAPTURE(s.field);
        CHECK(1.0 - fidelity(mode_ground_state(k, s.field).amplitudes, s.state.amplitudes) <= 10 * tol);
      }
    }
  }
}

TEST_CASE("slow ramp is adiabatic at the zone edge") {
  const int n = 100;
  const double k = pi - pi / n;
  const double rate = 0.01;
  const QuenchProtocol p(10, 0, rate);
  // The residual comes from the abrupt stop at g = 0: first-order adiabatic
  // perturbation theory gives amplitude rate * |dtheta/dg| / (4 eps) there,
  // with dtheta/dg = -sin k and eps = 2.
  const double amplitude = rate * std::sin(k) / 8;
  const double pk = excitation_probability(evolve_mode(k, p, bare(), n, 1e-12), k, 0);
  CHECK(pk == Approx(amplitude * amplitude).epsilon(0.02));
  CHECK(pk <= 2e-9);
}

TEST_CASE("small-k modes follow the Landau-Zener law") {
  const double rate = 0.01;
  const QuenchProtocol p(10, 0, rate);
  for (double k : {0.02, 0.04, 0.06}) {
    const double pk = excitation_probability(evolve_mode(k, p, bare(), 2000, 1e-10), k, 0);
    CAPTURE(k);
    CHECK(pk == Approx(std::exp(-2 * pi * k * k / rate)).epsilon(0.02));
  }
}

TEST_CASE("sudden limit approaches the overlap of the endpoint eigenstates") {
  const double k = pi / 2;
  const auto a = bloch_vector(k, 10);
  const auto b = bloch_vector(k, 0);
  const double cosine = (a.x * b.x + a.z * b.z) / (a.norm() * b.norm());
  const double sudden = 0.5 * (1.0 - cosine);
  CHECK(sudden == Approx(0.450248).epsilon(1e-6));
  const QuenchProtocol p(10, 0, 1e6);
  const double pk = excitation_probability(evolve_mode(k, p, bare(), 4, 1e-12), k, 0);
  CHECK(pk == Approx(sudden).epsilon(1e-4));
}

TEST_CASE("complete CD suppresses excitations at any rate") {
  for (double rate : {0.5, 5.0, 50.0, 500.0}) {
    CAPTURE(rate);
    CHECK(run_spectrum(QuenchProtocol(10, 0, rate), full_cd(60), 60, 1e-10).n_ex <= 1e-6);
  }
}

TEST_CASE("bare fast quench sits on the plateau") {
  const double n_ex = run_spectrum(QuenchProtocol(10, 0, 50), bare(), 400, 1e-10).n_ex;
  CHECK(n_ex > 0.1);
  CHECK(n_ex < 1.0);
}

TEST_CASE("h1_only coincides with h0_plus_h1 for fast ramps") {
  const QuenchProtocol p(10, 0, 500);
  const auto a = run_spectrum(p, DriverConfig{Composition::h0_plus_h1, CdConfig{16}}, 100, 1e-10);
  const auto b = run_spectrum(p, DriverConfig{Composition::h1_only, CdConfig{16}}, 100, 1e-10);
  for (std::size_t i = 0; i < a.p_k.size(); ++i) CHECK(std::abs(a.p_k[i] - b.p_k[i]) <= 1e-3);
}

TEST_CASE("fast quench universality per mode") {
  const DriverConfig d{Composition::h0_plus_h1, CdConfig{16}};
  const auto a = run_spectrum(QuenchProtocol(10, 0, 50), d, 200, 1e-10);
  const auto b = run_spectrum(QuenchProtocol(10, 0, 100), d, 200, 1e-10);
  for (std::size_t i = 0; i < a.p_k.size(); ++i) {
    CAPTURE(a.k_grid[i]);
    CHECK(std::abs(a.p_k[i] - b.p_k[i]) <= 0.01 * a.p_k[i] + 1e-8);
  }
}

TEST_CASE("longer range never hurts well-protected modes") {
  const int n = 400;
  const QuenchProtocol p(10, 0, 50);
  const auto p8 = run_spectrum(p, DriverConfig{Composition::h0_plus_h1, CdConfig{8}}, n, 1e-10);
  for (int m2 : {16, 32}) {
    const auto p2 = run_spectrum(p, DriverConfig{Composition::h0_plus_h1, CdConfig{m2}}, n, 1e-10);
    for (std::size_t i = 0; i < p8.p_k.size(); ++i) {
      if (p8.k_grid[i] < 8 * pi / 8) continue;
      CHECK(p2.p_k[i] <= p8.p_k[i] + 1e-3);
    }
  }
}

TEST_CASE("spectrum invariants and determinism") {
  const QuenchProtocol p(10, 0, 3);
  const DriverConfig d{Composition::h0_plus_h1, CdConfig{4, Filter::raised_cosine}};
  const auto one = run_spectrum(p, d, 64, 1e-10, 1);
  const auto many = run_spectrum(p, d, 64, 1e-10, 4);
  CHECK(one.p_k == many.p_k);
  CHECK(one.n_ex == many.n_ex);
  for (double pk : one.p_k) {
    CHECK(pk >= 0.0);
    CHECK(pk <= 1.0 + 10 * 1e-10);
  }
  CHECK(one.n_ex == excitation_density(one.p_k));
  CHECK(one.n_sites == 64);
}

TEST_CASE("mode failures carry the momentum") {
  const QuenchProtocol p(10, 0, 1);
  try {
    run_spectrum(p, bare(), 4, 1e-300);
    FAIL("expected an integration error");
  } catch (const IntegrationError& e) {
    CHECK(std::string(e.what()).find("mode k=") != std::string::npos);
  }
  CHECK_THROWS_AS(run_spectrum(p, full_cd(4), 5, 1e-10), std::invalid_argument);
}

TEST_CASE("excitation density quadrature") {
  CHECK(excitation_density(std::vector<double>(50, 0.0)) == 0.0);
  CHECK(excitation_density(std::vector<double>(50, 1.0)) == 1.0);
  const double rate = 0.01;
  std::vector<double> pk;
  for (double k : momentum_grid(4000)) pk.push_back(std::exp(-2 * pi * k * k / rate));
  CHECK(excitation_density(pk) == Approx(std::sqrt(rate / 2) / (2 * pi)).epsilon(1e-6));
}

TEST_CASE("sweep ordering and per-cell errors") {
  const QuenchProtocol base(10, 0, 1);
  const std::vector<double> rates{1.0, 10.0};
  const std::vector<int> cutoffs{0, 2, 99};
  const auto rows = sweep(base, rates, cutoffs, Filter::dirichlet, CoeffMode::exact_finite_n, 20, 1e-8);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].rate == 1.0);
  CHECK(rows[1].cutoff == 2);
  CHECK(rows[3].rate == 10.0);
  CHECK_FALSE(rows[0].error);
  CHECK(rows[2].error);
  CHECK(std::isnan(rows[2].n_ex));
  CHECK_FALSE(rows[4].error);
  CHECK(rows[4].n_ex < rows[3].n_ex);
}

TEST_CASE("fidelity susceptibility") {
  CHECK(fidelity_susceptibility(1e6, 100) < 1e-20);
  const double ratio = fidelity_susceptibility(1, 800) / fidelity_susceptibility(1, 400);
  CHECK(ratio == Approx(4.0).epsilon(0.02));
  // Thermodynamic-limit density: 1/(16 g^2 (g^2 - 1)) above, 1/(16 (1 - g^2)) below the critical field.
  for (double g : {1.5, 2.0, 3.0}) CHECK(fidelity_susceptibility(g, 400) / 400 == Approx(1 / (16 * g * g * (g * g - 1))));
  for (double g : {0.2, 0.5}) CHECK(fidelity_susceptibility(g, 400) / 400 == Approx(1 / (16 * (1 - g * g))));
}

TEST_CASE("CD variance identity") {
  CHECK(cd_variance(0.7, 0.0, 100) == 0.0);
  for (double g : {0.5, 1.5, 3.0}) {
    const double v = cd_variance(g, 1.0, 400);
    CHECK(std::abs(v - fidelity_susceptibility(g, 400)) <= 1e-10 * v);
    CHECK(cd_variance(g, 2.0, 400) == Approx(4 * v).epsilon(1e-14));
  }
}

}
