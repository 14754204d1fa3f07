#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "clickcal/homodyne.hpp"
#include "clickcal/rng.hpp"

using namespace clickcal;

namespace {
constexpr double kPi = 3.14159265358979323846;

JointClickHistogram exact_joint(double gamma_a, double gamma_b, int bins, double events) {
  auto dist = joint_coherent_click_distribution(gamma_a, bins, gamma_b, bins);
  for (double& p : dist.p) p *= events;
  return JointClickHistogram(bins, bins, dist.p);
}
}  // namespace

TEST_CASE("nonlinear quadrature mean") {
  SECTION("swap-symmetric statistics average to zero") {
    JointClickHistogram h(2, 2, std::vector<double>(9, 1.0));
    const auto [x, err] = quadrature_mean(h);
    REQUIRE(x == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(err > 0.0);
  }
  SECTION("product binomials give N (e^-Ga - e^-Gb)") {
    const int bins = 8;
    const double ga = 0.35, gb = 1.2;
    const auto h = exact_joint(ga, gb, bins, 1e6);
    const auto [x, err] = quadrature_mean(h);
    REQUIRE(x == Catch::Approx(bins * (std::exp(-ga) - std::exp(-gb))).margin(1e-12));
  }
  SECTION("extreme case: B always clicks, A never") {
    const int bins = 4;
    JointClickHistogram h(bins, bins, std::vector<double>(25, 0.0));
    h.at(0, bins) = 100.0;
    h.total = 100.0;
    const auto [x, err] = quadrature_mean(h);
    REQUIRE(x == Catch::Approx(static_cast<double>(bins)));
    REQUIRE(err == 0.0);
  }
  SECTION("swapping the modes flips the sign exactly") {
    const auto h = exact_joint(0.5, 1.7, 6, 1e5);
    JointClickHistogram swapped(6, 6, std::vector<double>(49, 0.0));
    for (int ka = 0; ka <= 6; ++ka)
      for (int kb = 0; kb <= 6; ++kb) swapped.at(kb, ka) = h.at(ka, kb);
    REQUIRE(quadrature_mean(h).first == Catch::Approx(-quadrature_mean(swapped).first).margin(1e-14));
  }
  SECTION("mismatched bin numbers are rejected") {
    JointClickHistogram h(2, 3, std::vector<double>(12, 1.0));
    REQUIRE_THROWS_AS(quadrature_mean(h), std::invalid_argument);
  }
}

TEST_CASE("balanced homodyne simulation") {
  const ResponseParams det{.eta = 0.298, .nu = 0.0, .bins = 8};

  SECTION("signal in phase with the LO darkens mode B") {
    const std::complex<double> lo{1.3, 0.0};
    const double phase = 0.7;
    const std::complex<double> signal = lo * std::polar(1.0, phase);
    const auto h = balanced_homodyne_simulate(signal, lo, phase, det, det, 200000, 21);
    // Mode B receives vacuum: with nu = 0 it never clicks.
    for (int ka = 0; ka <= 8; ++ka)
      for (int kb = 1; kb <= 8; ++kb) REQUIRE(h.at(ka, kb) == 0.0);
    const double gamma_a = det.gamma(2.0 * std::norm(lo));
    const auto [x, err] = quadrature_mean(h);
    REQUIRE(x <= 0.0);
    REQUIRE(std::abs(x - 8.0 * (std::exp(-gamma_a) - 1.0)) < 5.0 * err);
  }
  SECTION("signal in antiphase mirrors the sign") {
    const std::complex<double> lo{1.3, 0.0};
    const std::complex<double> signal = -lo;
    const auto h = balanced_homodyne_simulate(signal, lo, 0.0, det, det, 200000, 22);
    const double gamma_b = det.gamma(2.0 * std::norm(lo));
    const auto [x, err] = quadrature_mean(h);
    REQUIRE(x >= 0.0);
    REQUIRE(std::abs(x - 8.0 * (1.0 - std::exp(-gamma_b))) < 5.0 * err);
  }
  SECTION("dark inputs stay silent") {
    const auto h = balanced_homodyne_simulate({0.0, 0.0}, {0.0, 0.0}, 0.3, det, det, 5000, 23);
    REQUIRE(h.at(0, 0) == 5000.0);
    REQUIRE(quadrature_mean(h).first == 0.0);
  }
  SECTION("identical seeds reproduce the histogram") {
    const auto a = balanced_homodyne_simulate({0.4, 0.1}, {1.0, 0.0}, 0.5, det, det, 10000, 77);
    const auto b = balanced_homodyne_simulate({0.4, 0.1}, {1.0, 0.0}, 0.5, det, det, 10000, 77);
    REQUIRE(a.counts == b.counts);
  }
}

TEST_CASE("click quasiprobability point") {
  SECTION("vacuum clicks at s = 0 give 2/pi") {
    std::vector<double> clicks{1.0, 0.0, 0.0, 0.0, 0.0};
    const auto q = quasiprob_point(clicks, 0.5, 0.0, {0.0, 0.0});
    REQUIRE(q.value == Catch::Approx(2.0 / kPi).margin(1e-14));
  }
  SECTION("single-photon clicks give -2/pi for any efficiency and bin number") {
    for (double eta : {0.1, 0.5, 1.0}) {
      for (int bins : {1, 4, 8}) {
        std::vector<double> clicks(static_cast<std::size_t>(bins) + 1, 0.0);
        clicks[0] = 1.0 - eta;
        clicks[1] = eta;
        const auto q = quasiprob_point(clicks, eta, 0.0, {0.0, 0.0});
        REQUIRE(q.value == Catch::Approx(-2.0 / kPi).margin(1e-13));
      }
    }
  }
  SECTION("invalid ordering parameters and efficiencies are rejected") {
    std::vector<double> clicks{1.0, 0.0};
    REQUIRE_THROWS_AS(quasiprob_point(clicks, 0.5, 1.0, {0, 0}), std::invalid_argument);
    REQUIRE_THROWS_AS(quasiprob_point(clicks, 0.0, 0.0, {0, 0}), std::invalid_argument);
    REQUIRE_THROWS_AS(quasiprob_point(std::vector<double>{0.7, 0.7}, 0.5, 0.0, {0, 0}), std::invalid_argument);
  }
}

TEST_CASE("quasiprobability scans") {
  SECTION("coherent scan peaks at the signal amplitude") {
    ScanState state;
    state.kind = ScanState::Kind::Coherent;
    state.amplitude = {0.5, -0.25};
    ComplexGrid grid{.re_min = -1.5, .re_max = 1.5, .re_steps = 13, .im_min = -1.5, .im_max = 1.5, .im_steps = 13};
    const auto points = quasiprob_scan(state, grid, 1.0, 0.0, 8);
    double best = -1e300;
    std::complex<double> at;
    for (const auto& p : points)
      if (p.value > best) {
        best = p.value;
        at = p.alpha;
      }
    REQUIRE(std::abs(at - state.amplitude) < 0.3);  // grid pitch 0.25
    REQUIRE(best <= 2.0 / kPi + 1e-12);
  }
  SECTION("vacuum scan is radially symmetric") {
    ScanState state;
    state.kind = ScanState::Kind::Coherent;
    state.amplitude = {0.0, 0.0};
    ComplexGrid grid{.re_min = -1.0, .re_max = 1.0, .re_steps = 9, .im_min = -1.0, .im_max = 1.0, .im_steps = 9};
    const auto points = quasiprob_scan(state, grid, 0.7, 0.0, 8);
    auto value_at = [&](int i, int j) { return points[static_cast<std::size_t>(i) * 9 + j].value; };
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j) {
        REQUIRE(value_at(i, j) == Catch::Approx(value_at(8 - i, j)).margin(1e-12));
        REQUIRE(value_at(i, j) == Catch::Approx(value_at(j, i)).margin(1e-12));
      }
  }
  SECTION("Fock |1> at the origin reaches -2/pi through the POVM path") {
    ScanState state;
    state.kind = ScanState::Kind::Fock;
    state.fock_n = 1;
    ComplexGrid origin{.re_min = 0.0, .re_max = 0.0, .re_steps = 1, .im_min = 0.0, .im_max = 0.0, .im_steps = 1};
    for (double eta : {0.1, 0.5, 1.0})
      for (int bins : {1, 8}) {
        const auto points = quasiprob_scan(state, origin, eta, 0.0, bins, 100);
        REQUIRE(points.size() == 1);
        REQUIRE(points[0].value == Catch::Approx(-2.0 / kPi).margin(1e-10));
      }
  }
  SECTION("coherent scans at even bin numbers never go negative") {
    Rng rng(83);
    for (int trial = 0; trial < 5; ++trial) {
      ScanState state;
      state.kind = ScanState::Kind::Coherent;
      state.amplitude = {2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
      const double eta = 0.1 + 0.9 * rng.uniform();
      ComplexGrid grid{.re_min = -3.0, .re_max = 3.0, .re_steps = 11, .im_min = -3.0, .im_max = 3.0, .im_steps = 11};
      const auto points = quasiprob_scan(state, grid, eta, 0.0, 8);
      for (const auto& p : points) REQUIRE(p.value >= -1e-10);
    }
  }
}
