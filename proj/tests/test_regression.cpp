#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "clickcal/regression.hpp"
#include "clickcal/rng.hpp"
#include "oracles.hpp"

using namespace clickcal;

namespace {

ResponseCurve make_curve(int bins, const std::vector<double>& powers, const std::vector<double>& gammas,
                         double power_err_frac = 0.0, double gamma_err = 0.0) {
  ResponseCurve c;
  c.mode = "A";
  c.bins = bins;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    ResponsePoint p;
    p.power_nw = powers[i];
    p.power_err_nw = power_err_frac * powers[i];
    p.gamma = gammas[i];
    p.gamma_err = gamma_err;
    c.points.push_back(p);
  }
  c.sort_by_power();
  return c;
}

double wtls_objective_direct(const std::vector<double>& x, const std::vector<double>& sx, const std::vector<double>& y,
                             const std::vector<double>& sy, double a) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - a * x[i];
    s += r * r / (sy[i] * sy[i] + a * a * sx[i] * sx[i]);
  }
  return s;
}

}  // namespace

TEST_CASE("power to photon conversion") {
  REQUIRE(power_to_photons(0.0, 0.177) == 0.0);
  REQUIRE(power_to_photons(1.0, 0.177) == Catch::Approx(0.177));
  REQUIRE(power_to_photons(10.0, 0.177) == Catch::Approx(1.77));
  REQUIRE_THROWS_AS(power_to_photons(1.0, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(power_to_photons(-1.0, 0.177), std::invalid_argument);
}

TEST_CASE("taylor expansion of the response") {
  std::vector<double> powers;
  for (int i = 1; i <= 12; ++i) powers.push_back(10.0 * i);

  SECTION("exact linear data yields (0, a, 0, 0)") {
    const double slope = 52.86e-3;
    std::vector<double> gammas;
    for (double p : powers) gammas.push_back(slope * p / 8.0);
    const auto fit = taylor_fit(make_curve(8, powers, gammas), 3);
    REQUIRE(std::abs(fit.coeffs[0]) < 1e-9);
    REQUIRE(fit.coeffs[1] == Catch::Approx(slope).epsilon(1e-9));
    REQUIRE(std::abs(fit.coeffs[2]) < 1e-9);
    REQUIRE(std::abs(fit.coeffs[3]) < 1e-9);
  }
  SECTION("exact quadratic data recovers the quadratic coefficient") {
    const double a1 = 0.05, a2 = 7e-4;
    std::vector<double> gammas;
    for (double p : powers) {
      const double x = p / 8.0;
      gammas.push_back(a1 * x + a2 * x * x);
    }
    const auto fit = taylor_fit(make_curve(8, powers, gammas), 2);
    REQUIRE(fit.coeffs[1] == Catch::Approx(a1).epsilon(1e-9));
    REQUIRE(fit.coeffs[2] == Catch::Approx(a2).epsilon(1e-9));
  }
  SECTION("noise-free residuals vanish") {
    std::vector<double> gammas;
    for (double p : powers) gammas.push_back(0.04 * p / 8.0);
    const auto fit = taylor_fit(make_curve(8, powers, gammas), 1);
    REQUIRE(fit.weighted_ssr < 1e-18);
  }
  SECTION("duplicate powers leave the design rank-deficient") {
    const auto curve = make_curve(8, {10.0, 10.0, 10.0, 10.0}, {0.1, 0.1, 0.1, 0.1});
    REQUIRE_THROWS(taylor_fit(curve, 3));
  }
  SECTION("order limits") {
    const auto curve = make_curve(8, {10.0, 20.0, 30.0}, {0.1, 0.2, 0.3});
    REQUIRE_THROWS_AS(taylor_fit(curve, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(taylor_fit(curve, 3), std::invalid_argument);  // needs 4 points
  }
}

TEST_CASE("nonlinearity ratios") {
  PolyFit fit;
  fit.order = 3;
  fit.coeff_errs = {0.0, 0.0, 0.0, 0.0};

  fit.coeffs = {0.0, 0.7, 0.0, 0.0};
  auto r = nonlinearity_ratios(fit);
  REQUIRE(r.r2 == 0.0);
  REQUIRE(r.r3 == 0.0);

  fit.coeffs = {0.0, 1.0, 1e-3, 1e-4};
  r = nonlinearity_ratios(fit);
  REQUIRE(r.r2 == Catch::Approx(1e-3));
  REQUIRE(r.r3 == Catch::Approx(1e-4));

  fit.coeffs = {0.0, 2.0, 1.0, 0.5};
  r = nonlinearity_ratios(fit);
  REQUIRE(r.r2 == Catch::Approx(0.5));
  REQUIRE(r.r3 == Catch::Approx(0.25));

  fit.coeffs = {0.0, 0.0, 1.0, 0.5};
  REQUIRE_THROWS_AS(nonlinearity_ratios(fit), std::invalid_argument);
}

TEST_CASE("weighted total least squares through the origin") {
  SECTION("exact colinear data gives the exact slope under any positive weights") {
    Rng rng(5);
    const double slope = 0.0529;
    std::vector<double> x, sx, y, sy;
    for (int i = 1; i <= 20; ++i) {
      x.push_back(2.5 * i);
      y.push_back(slope * 2.5 * i);
      sx.push_back(0.05 * 2.5 * i * (0.5 + rng.uniform()));
      sy.push_back(1e-3 * (0.5 + rng.uniform()));
    }
    const auto fit = wtls_line_through_origin(x, sx, y, sy);
    REQUIRE(fit.slope == Catch::Approx(slope).epsilon(1e-12));
  }
  SECTION("single point returns y/x") {
    const auto fit = wtls_line_through_origin(std::vector<double>{4.0}, std::vector<double>{0.2},
                                              std::vector<double>{1.0}, std::vector<double>{0.05});
    REQUIRE(fit.slope == Catch::Approx(0.25).epsilon(1e-12));
  }
  SECTION("matches a golden-section minimization of the raw objective") {
    Rng rng(29);
    for (int trial = 0; trial < 25; ++trial) {
      const double truth = 0.02 + 0.1 * rng.uniform();
      std::vector<double> x, sx, y, sy;
      for (int i = 1; i <= 15; ++i) {
        const double xt = 3.0 * i;
        const double sxi = 0.05 * xt;
        const double syi = 0.002 + 0.004 * rng.uniform();
        x.push_back(xt + sxi * rng.normal());
        sx.push_back(sxi);
        y.push_back(truth * xt + syi * rng.normal());
        sy.push_back(syi);
      }
      const auto fit = wtls_line_through_origin(x, sx, y, sy);
      const double oracle = oracles::golden_minimize(
          [&](double a) { return wtls_objective_direct(x, sx, y, sy, a); }, 0.25 * truth, 4.0 * truth);
      REQUIRE(fit.slope == Catch::Approx(oracle).margin(1e-10));
      REQUIRE(wtls_objective_direct(x, sx, y, sy, fit.slope) <= wtls_objective_direct(x, sx, y, sy, oracle) + 1e-12);
    }
  }
  SECTION("slope error agrees with the finite-difference curvature") {
    Rng rng(31);
    std::vector<double> x, sx, y, sy;
    for (int i = 1; i <= 12; ++i) {
      x.push_back(5.0 * i);
      sx.push_back(0.25 * i);
      y.push_back(0.05 * 5.0 * i + 0.01 * rng.normal());
      sy.push_back(0.01);
    }
    const auto fit = wtls_line_through_origin(x, sx, y, sy);
    const double h = 1e-5 * fit.slope;
    const double s0 = wtls_objective_direct(x, sx, y, sy, fit.slope);
    const double sp = wtls_objective_direct(x, sx, y, sy, fit.slope + h);
    const double sm = wtls_objective_direct(x, sx, y, sy, fit.slope - h);
    const double curvature = (sp - 2.0 * s0 + sm) / (h * h);
    REQUIRE(fit.slope_err == Catch::Approx(std::sqrt(2.0 / curvature)).epsilon(1e-4));
  }
  SECTION("rescaling x and sigma_x by lambda rescales the slope by 1/lambda") {
    Rng rng(41);
    std::vector<double> x, sx, y, sy;
    for (int i = 1; i <= 10; ++i) {
      x.push_back(2.0 * i + 0.1 * rng.normal());
      sx.push_back(0.1 * i);
      y.push_back(0.07 * 2.0 * i + 0.005 * rng.normal());
      sy.push_back(0.005);
    }
    const auto base = wtls_line_through_origin(x, sx, y, sy);
    const double lambda = 37.5;
    std::vector<double> xl = x, sxl = sx;
    for (double& v : xl) v *= lambda;
    for (double& v : sxl) v *= lambda;
    const auto scaled = wtls_line_through_origin(xl, sxl, y, sy);
    REQUIRE(scaled.slope == Catch::Approx(base.slope / lambda).epsilon(1e-10));
  }
  SECTION("noise-free curves give the taylor order-1 slope when x-errors vanish") {
    std::vector<double> powers, gammas;
    for (int i = 1; i <= 9; ++i) {
      powers.push_back(12.0 * i);
      gammas.push_back(0.0529 * 12.0 * i / 8.0);
    }
    const auto curve = make_curve(8, powers, gammas);
    const auto wtls = wtls_line_through_origin(curve);
    const auto taylor = taylor_fit(curve, 1);
    REQUIRE(wtls.slope == Catch::Approx(taylor.coeffs[1]).epsilon(1e-9));
  }
  SECTION("all-zero abscissae are rejected") {
    REQUIRE_THROWS_AS(wtls_line_through_origin(std::vector<double>{0.0, 0.0}, std::vector<double>{0.1, 0.1},
                                               std::vector<double>{1.0, 2.0}, std::vector<double>{0.1, 0.1}),
                      std::invalid_argument);
  }
  SECTION("synthetic curve at the reference slope is recovered within 3 sigma") {
    const double truth = 52.86e-3;
    Rng rng(57);
    std::vector<double> x, sx, y, sy;
    for (int i = 0; i < 45; ++i) {
      const double p_true = 50.0 * std::pow(390.0 / 50.0, i / 44.0) / 8.0;
      const double sxi = 0.05 * p_true;
      const double syi = 5e-4;
      x.push_back(p_true + sxi * rng.normal());
      sx.push_back(sxi);
      y.push_back(truth * p_true + syi * rng.normal());
      sy.push_back(syi);
    }
    const auto fit = wtls_line_through_origin(x, sx, y, sy);
    REQUIRE(std::abs(fit.slope - truth) < 3.0 * fit.slope_err);
  }
}

TEST_CASE("efficiency from the fitted slope") {
  SECTION("reference horizontal-mode value") {
    const auto [eta, err] = efficiency_from_slope(52.86e-3, 0.04e-3, 0.177, 0.017);
    REQUIRE(eta == Catch::Approx(0.298).margin(7e-4));
    REQUIRE(err == Catch::Approx(0.0287).margin(2e-3));
  }
  SECTION("slope equal to chi gives unit efficiency with zero error") {
    const auto [eta, err] = efficiency_from_slope(0.177, 0.0, 0.177, 0.0);
    REQUIRE(eta == 1.0);
    REQUIRE(err == 0.0);
  }
  SECTION("vertical-mode cross-check") {
    const auto [eta, err] = efficiency_from_slope(33.23e-3, 0.04e-3, 0.177, 0.017);
    REQUIRE(eta == Catch::Approx(0.188).margin(1e-3));
    REQUIRE(err == Catch::Approx(0.018).margin(1e-3));
  }
}

TEST_CASE("cosine polarization fit") {
  auto sweep = [](double emax, double emin, double phi0, const std::vector<double>& angles) {
    std::vector<double> eta;
    for (double phi : angles)
      eta.push_back(0.5 * (emax - emin) * std::cos(4.0 * (phi + phi0) * 0.017453292519943295) + 0.5 * (emax + emin));
    return eta;
  };
  std::vector<double> angles;
  for (int i = 0; i < 17; ++i) angles.push_back(5.0 * i);

  SECTION("noiseless mode-A parameters are recovered to 1e-9") {
    const auto eta = sweep(30.2, 19.3, 1.5, angles);
    const auto fit = cosine_efficiency_fit(angles, eta, {});
    REQUIRE(fit.eta_max == Catch::Approx(30.2).margin(1e-9));
    REQUIRE(fit.eta_min == Catch::Approx(19.3).margin(1e-9));
    REQUIRE(fit.phi0_deg == Catch::Approx(1.5).margin(1e-9));
  }
  SECTION("noiseless mode-B parameters are recovered to 1e-9") {
    const auto eta = sweep(28.2, 12.8, 13.5, angles);
    const auto fit = cosine_efficiency_fit(angles, eta, {});
    REQUIRE(fit.eta_max == Catch::Approx(28.2).margin(1e-9));
    REQUIRE(fit.eta_min == Catch::Approx(12.8).margin(1e-9));
    REQUIRE(fit.phi0_deg == Catch::Approx(13.5).margin(1e-9));
  }
  SECTION("one-percent noise keeps the parameters within 3 sigma") {
    Rng rng(71);
    auto eta = sweep(28.2, 12.8, 13.5, angles);
    std::vector<double> sigma;
    for (double& e : eta) {
      const double s = 0.01 * e;
      sigma.push_back(s);
      e += s * rng.normal();
    }
    const auto fit = cosine_efficiency_fit(angles, eta, sigma);
    REQUIRE(std::abs(fit.eta_max - 28.2) < 3.0 * fit.eta_max_err);
    REQUIRE(std::abs(fit.eta_min - 12.8) < 3.0 * fit.eta_min_err);
    REQUIRE(std::abs(fit.phi0_deg - 13.5) < 3.0 * fit.phi0_err_deg);
  }
  SECTION("constant data degenerates to zero amplitude with phi0 = 0") {
    const std::vector<double> eta(angles.size(), 21.5);
    const auto fit = cosine_efficiency_fit(angles, eta, {});
    REQUIRE(fit.degenerate_amplitude);
    REQUIRE(fit.eta_max == Catch::Approx(21.5).margin(1e-12));
    REQUIRE(fit.eta_min == Catch::Approx(21.5).margin(1e-12));
    REQUIRE(fit.phi0_deg == 0.0);
  }
  SECTION("angle-shift equivariance: phi0 shifts by -delta modulo 45") {
    const double delta = 7.25;
    std::vector<double> shifted;
    for (double a : angles) shifted.push_back(a + delta);
    const auto eta_vals = sweep(30.2, 19.3, 1.5, angles);
    const auto base = cosine_efficiency_fit(angles, eta_vals, {});
    // Same efficiency values, relabeled angles.
    const auto moved = cosine_efficiency_fit(shifted, eta_vals, {});
    double expected = base.phi0_deg - delta;
    expected = std::fmod(expected + 22.5, 45.0);
    if (expected < 0.0) expected += 45.0;
    expected = expected == 0.0 ? 22.5 : expected - 22.5;
    REQUIRE(moved.phi0_deg == Catch::Approx(expected).margin(1e-9));
  }
  SECTION("degenerate angle sets are rejected") {
    const std::vector<double> bad{0.0, 90.0, 180.0};  // one distinct angle modulo 90
    REQUIRE_THROWS_AS(cosine_efficiency_fit(bad, std::vector<double>{1.0, 1.0, 1.0}, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(cosine_efficiency_fit(std::vector<double>{0.0, 10.0}, std::vector<double>{1.0, 1.0}, {}),
                      std::invalid_argument);
  }
}
