#pragma once
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "clickcal/fitting.hpp"
#include "clickcal/numeric.hpp"

namespace clickcal {

/// Probability distribution P(eta) of the intensity transmittance of a
/// fluctuating loss channel, supported on [0, 1].
class TransmittanceModel {
 public:
  enum class Kind { Delta, Uniform, TruncatedLogNormal, Beta, Tabulated };

  static TransmittanceModel delta(double eta0) {
    if (!(eta0 >= 0.0 && eta0 <= 1.0)) throw std::invalid_argument("TransmittanceModel: delta position must lie in [0, 1]");
    TransmittanceModel m;
    m.kind_ = Kind::Delta;
    m.a_ = eta0;
    return m;
  }

  static TransmittanceModel uniform(double lo = 0.0, double hi = 1.0) {
    if (!(lo >= 0.0 && hi <= 1.0 && hi > lo)) throw std::invalid_argument("TransmittanceModel: uniform needs 0 <= lo < hi <= 1");
    TransmittanceModel m;
    m.kind_ = Kind::Uniform;
    m.a_ = lo;
    m.b_ = hi;
    return m;
  }

  /// Log-normal in eta, truncated to (0, 1] and renormalized.
  static TransmittanceModel truncated_log_normal(double mu, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("TransmittanceModel: log-normal sigma must be > 0");
    TransmittanceModel m;
    m.kind_ = Kind::TruncatedLogNormal;
    m.a_ = mu;
    m.b_ = sigma;
    m.norm_ = 0.5 * std::erfc(mu / (sigma * std::sqrt(2.0)));  // P(eta <= 1)
    if (!(m.norm_ > 0.0)) throw std::invalid_argument("TransmittanceModel: log-normal carries no mass on (0, 1]");
    return m;
  }

  static TransmittanceModel beta(double alpha, double beta_param) {
    if (!(alpha > 0.0 && beta_param > 0.0)) throw std::invalid_argument("TransmittanceModel: beta shape parameters must be > 0");
    TransmittanceModel m;
    m.kind_ = Kind::Beta;
    m.a_ = alpha;
    m.b_ = beta_param;
    return m;
  }

  /// Piecewise-linear density on ascending nodes in [0, 1]; normalized here.
  static TransmittanceModel tabulated(std::vector<double> nodes, std::vector<double> densities) {
    if (nodes.size() != densities.size() || nodes.size() < 2)
      throw std::invalid_argument("TransmittanceModel: tabulated needs >= 2 matching nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!(nodes[i] >= 0.0 && nodes[i] <= 1.0)) throw std::invalid_argument("TransmittanceModel: nodes must lie in [0, 1]");
      if (i > 0 && !(nodes[i] > nodes[i - 1])) throw std::invalid_argument("TransmittanceModel: nodes must be strictly ascending");
      if (!(densities[i] >= 0.0)) throw std::invalid_argument("TransmittanceModel: densities must be >= 0");
    }
    double z = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
      z += 0.5 * (densities[i] + densities[i + 1]) * (nodes[i + 1] - nodes[i]);
    if (!(z > 0.0)) throw std::invalid_argument("TransmittanceModel: tabulated density integrates to zero");
    TransmittanceModel m;
    m.kind_ = Kind::Tabulated;
    m.nodes_ = std::move(nodes);
    m.dens_ = std::move(densities);
    for (double& d : m.dens_) d /= z;
    return m;
  }

  Kind kind() const { return kind_; }

  /// Density at eta (continuous kinds only).
  double density(double eta) const {
    switch (kind_) {
      case Kind::Delta:
        throw std::invalid_argument("TransmittanceModel: delta has no density");
      case Kind::Uniform:
        return (eta >= a_ && eta <= b_) ? 1.0 / (b_ - a_) : 0.0;
      case Kind::TruncatedLogNormal: {
        if (!(eta > 0.0) || eta > 1.0) return 0.0;
        const double z = (std::log(eta) - a_) / b_;
        return std::exp(-0.5 * z * z) / (eta * b_ * std::sqrt(2.0 * 3.14159265358979323846) * norm_);
      }
      case Kind::Beta: {
        if (eta < 0.0 || eta > 1.0) return 0.0;
        const double log_b = std::lgamma(a_) + std::lgamma(b_) - std::lgamma(a_ + b_);
        return std::exp((a_ - 1.0) * std::log(eta) + (b_ - 1.0) * std::log1p(-eta) - log_b);
      }
      case Kind::Tabulated: {
        if (eta < nodes_.front() || eta > nodes_.back()) return 0.0;
        std::size_t i = 1;
        while (i + 1 < nodes_.size() && nodes_[i] < eta) ++i;
        const double t = (eta - nodes_[i - 1]) / (nodes_[i] - nodes_[i - 1]);
        return dens_[i - 1] + t * (dens_[i] - dens_[i - 1]);
      }
    }
    return 0.0;
  }

  /// integral_0^1 P(eta) exp(-c eta) d eta; closed form where available,
  /// adaptive quadrature (abs tol 1e-12) otherwise.
  double mean_exp(double c) const {
    if (!std::isfinite(c)) throw std::invalid_argument("TransmittanceModel: nonfinite exponent");
    switch (kind_) {
      case Kind::Delta:
        return std::exp(-c * a_);
      case Kind::Uniform: {
        const double span = b_ - a_;
        const double t = c * span;
        // exp(-c a) (1 - exp(-c span)) / (c span), stable near c = 0.
        const double factor = std::abs(t) < 1e-12 ? 1.0 - 0.5 * t : -std::expm1(-t) / t;
        return std::exp(-c * a_) * factor;
      }
      case Kind::Beta:
        return kummer_moment(c);
      case Kind::TruncatedLogNormal:
        return adaptive_simpson([this, c](double eta) { return eta <= 0.0 ? 0.0 : density(eta) * std::exp(-c * eta); }, 0.0,
                                1.0, 1e-12);
      case Kind::Tabulated: {
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
          total += segment_exp_integral(nodes_[i], nodes_[i + 1], dens_[i], dens_[i + 1], c);
        return total;
      }
    }
    return 0.0;
  }

  /// Exact transmittance moments <eta^j> for j = 1, 2 (used by oracles and
  /// reports; closed forms per kind, quadrature for the rest).
  double moment(int j) const {
    switch (kind_) {
      case Kind::Delta:
        return std::pow(a_, j);
      case Kind::Uniform:
        return (std::pow(b_, j + 1) - std::pow(a_, j + 1)) / ((j + 1.0) * (b_ - a_));
      case Kind::Beta: {
        double r = 1.0;
        for (int i = 0; i < j; ++i) r *= (a_ + i) / (a_ + b_ + i);
        return r;
      }
      default:
        return adaptive_simpson([this, j](double eta) { return eta <= 0.0 ? 0.0 : density(eta) * std::pow(eta, j); }, 0.0,
                                1.0, 1e-12);
    }
  }

  /// Quadrature check of the normalization; exact kinds return 0 analytically.
  double normalization_defect() const {
    switch (kind_) {
      case Kind::Delta:
      case Kind::Uniform:
      case Kind::Beta:
        return 0.0;
      default:
        return std::abs(adaptive_simpson([this](double eta) { return eta <= 0.0 ? 0.0 : density(eta); }, 0.0, 1.0, 1e-12) -
                        1.0);
    }
  }

  double param_a() const { return a_; }
  double param_b() const { return b_; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& densities() const { return dens_; }

 private:
  TransmittanceModel() = default;

  /// Beta-weighted exponential moment via the Kummer transform,
  /// 1F1(a; a+b; -c) = e^{-c} 1F1(b; a+b; c): an all-positive series.
  double kummer_moment(double c) const {
    if (c == 0.0) return 1.0;
    double term = 1.0, sum = 1.0;
    for (int k = 0; k < 100000; ++k) {
      term *= (b_ + k) * c / ((a_ + b_ + k) * (k + 1.0));
      sum += term;
      if (term < 1e-18 * sum && k > c) break;
    }
    return std::exp(-c) * sum;
  }

  /// integral of (linear density) * exp(-c eta) over one tabulated segment.
  static double segment_exp_integral(double x0, double x1, double f0, double f1, double c) {
    const double dx = x1 - x0;
    const double slope = (f1 - f0) / dx;
    if (std::abs(c) * dx < 1e-6) {
      // Short segment or tiny exponent: 4-term Taylor of exp(-c eta) around x0.
      double total = 0.0;
      double cpow = 1.0;
      for (int t = 0; t < 6; ++t) {
        // integral (f0 + slope (eta-x0)) (eta-x0)^t d eta over [x0, x1]
        const double ip = f0 * std::pow(dx, t + 1) / (t + 1.0) + slope * std::pow(dx, t + 2) / (t + 2.0);
        total += cpow * ip;
        cpow *= -c / (t + 1.0);
      }
      return std::exp(-c * x0) * total;
    }
    auto antideriv = [&](double x) {
      const double f = f0 + slope * (x - x0);
      return -std::exp(-c * x) * (f / c + slope / (c * c));
    };
    return antideriv(x1) - antideriv(x0);
  }

  Kind kind_ = Kind::Delta;
  double a_ = 0.0;
  double b_ = 0.0;
  double norm_ = 1.0;
  std::vector<double> nodes_;
  std::vector<double> dens_;
};

/// Detected first click moment of a coherent probe behind a fluctuating loss
/// channel: integral of P(eta) exp(-eta eta_det |alpha|^2 / N).
inline double turbulence_moment(double alpha_sq, double eta_det, int bins, const TransmittanceModel& model) {
  if (!(alpha_sq >= 0.0)) throw std::invalid_argument("turbulence_moment: |alpha|^2 must be >= 0");
  if (!(eta_det > 0.0 && eta_det <= 1.0)) throw std::invalid_argument("turbulence_moment: eta_det must lie in (0, 1]");
  if (bins < 1) throw std::invalid_argument("turbulence_moment: bins must be >= 1");
  return model.mean_exp(eta_det * alpha_sq / static_cast<double>(bins));
}

/// One measured moment point of the sensing pipeline.
struct SensingPoint {
  double alpha_sq = 0.0;
  double moment = 0.0;
  double moment_err = 0.0;
};

/// Extracted transmittance moments with diagnostics.
struct SensedMoments {
  double eta_mean = 0.0;
  double eta_mean_err = 0.0;
  double eta_sq_mean = 0.0;
  double eta_sq_mean_err = 0.0;
  double intercept = 0.0;  // expected 1
  double intercept_err = 0.0;
  double variance = 0.0;  // <eta^2> - <eta>^2
  double variance_err = 0.0;
  bool intercept_flagged = false;          // |intercept - 1| beyond 5 sigma
  bool negative_variance_flagged = false;  // variance below -3 sigma
};

/// Recover <eta> and <eta^2> from moments at small |alpha|^2 by a weighted
/// quadratic fit m(x) ~ a0 + a1 x + a2 x^2:
///   <eta>   = -a1 N / eta_det,
///   <eta^2> = 2 a2 N^2 / eta_det^2.
inline SensedMoments extract_transmittance_moments(std::span<const SensingPoint> points, double eta_det, int bins,
                                                   int fit_order = 2) {
  if (points.size() < 3) throw std::invalid_argument("extract_transmittance_moments: needs at least 3 points");
  if (!(eta_det > 0.0 && eta_det <= 1.0))
    throw std::invalid_argument("extract_transmittance_moments: eta_det must lie in (0, 1]");
  if (bins < 1) throw std::invalid_argument("extract_transmittance_moments: bins must be >= 1");
  if (fit_order < 2 || fit_order > 3) throw std::invalid_argument("extract_transmittance_moments: fit order must be 2 or 3");
  if (points.size() < static_cast<std::size_t>(fit_order) + 1)
    throw std::invalid_argument("extract_transmittance_moments: needs at least fit_order+1 points");

  std::vector<double> x, y, sy;
  x.reserve(points.size());
  for (const auto& p : points) {
    if (!(p.alpha_sq >= 0.0)) throw std::invalid_argument("extract_transmittance_moments: |alpha|^2 must be >= 0");
    x.push_back(p.alpha_sq);
    y.push_back(p.moment);
    sy.push_back(p.moment_err);
  }
  const PolyFit fit = weighted_polyfit(x, y, sy, fit_order);

  const double n = static_cast<double>(bins);
  const double s1 = -n / eta_det;                 // d<eta>/d a1
  const double s2 = 2.0 * n * n / (eta_det * eta_det);  // d<eta^2>/d a2

  SensedMoments out;
  out.intercept = fit.coeffs[0];
  out.intercept_err = fit.coeff_errs[0];
  out.eta_mean = s1 * fit.coeffs[1];
  out.eta_mean_err = std::abs(s1) * fit.coeff_errs[1];
  out.eta_sq_mean = s2 * fit.coeffs[2];
  out.eta_sq_mean_err = std::abs(s2) * fit.coeff_errs[2];
  out.variance = out.eta_sq_mean - out.eta_mean * out.eta_mean;

  // var(V) with V = s2 a2 - (s1 a1)^2, linearized in (a1, a2).
  const double d_a1 = -2.0 * out.eta_mean * s1;
  const double d_a2 = s2;
  const double v = d_a1 * d_a1 * fit.covariance(1, 1) + d_a2 * d_a2 * fit.covariance(2, 2) +
                   2.0 * d_a1 * d_a2 * fit.covariance(1, 2);
  out.variance_err = std::sqrt(std::max(v, 0.0));

  if (out.intercept_err > 0.0)
    out.intercept_flagged = std::abs(out.intercept - 1.0) > 5.0 * out.intercept_err;
  out.negative_variance_flagged = out.variance < -3.0 * out.variance_err;
  return out;
}

}  // namespace clickcal
