#pragma once

// Model parameters, the incidence-function family and the standing
// assumptions on it (H1: 0 < G(I) <= I G'(0); H2: g = G/I Lipschitz).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rsirs/errors.hpp"

namespace rsirs {

/// Point (S, I, R) of the epidemic state space.
struct EpidemicState {
  double s = 0.0;
  double i = 0.0;
  double r = 0.0;

  double total() const { return s + i + r; }

  std::array<double, 3> as_array() const { return {s, i, r}; }
  static EpidemicState from_array(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

  bool is_finite_nonnegative() const {
    return std::isfinite(s) && std::isfinite(i) && std::isfinite(r) && s >= 0.0 && i >= 0.0 && r >= 0.0;
  }

  friend bool operator==(const EpidemicState&, const EpidemicState&) = default;
};

/// Scalar rates shared by every regime, plus one transmission rate per regime.
struct ModelParams {
  double lambda_in = 0.0;    ///< recruitment Λ
  double mu = 0.0;           ///< natural mortality μ
  double lambda_loss = 0.0;  ///< loss of immunity λ
  double alpha = 0.0;        ///< disease mortality α
  double delta = 0.0;        ///< recovery δ
  std::vector<double> betas; ///< β_e per regime

  std::size_t regimes() const { return betas.size(); }

  /// μ + α + δ, the exit rate from the infective class.
  double removal_rate() const { return mu + alpha + delta; }

  /// Λ/μ, the upper end of the attracting population band.
  double carrying_population() const { return lambda_in / mu; }

  double beta_max() const { return *std::max_element(betas.begin(), betas.end()); }

  void validate() const {
    const auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!(finite_nonneg(lambda_in) && lambda_in > 0.0)) throw Error(ErrorKind::config, "Lambda must be finite and > 0");
    if (!(finite_nonneg(mu) && mu > 0.0)) throw Error(ErrorKind::config, "mu must be finite and > 0");
    if (!finite_nonneg(lambda_loss)) throw Error(ErrorKind::config, "lambda must be finite and >= 0");
    if (!finite_nonneg(alpha)) throw Error(ErrorKind::config, "alpha must be finite and >= 0");
    if (!finite_nonneg(delta)) throw Error(ErrorKind::config, "delta must be finite and >= 0");
    if (betas.empty()) throw Error(ErrorKind::config, "betas must list one rate per regime");
    for (std::size_t e = 0; e < betas.size(); ++e) {
      if (!(finite_nonneg(betas[e]) && betas[e] > 0.0))
        throw Error(ErrorKind::config, "betas[" + std::to_string(e) + "] must be finite and > 0");
    }
  }
};

/// Monotone response f with f(0)=0 used by the second media-coverage incidence.
struct MediaResponse {
  std::string family;  ///< "michaelis", "exp" or "custom"
  double parameter = 0.0;
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> d2f;

  /// f(I) = I / (h + I)
  static MediaResponse michaelis(double half_saturation) {
    const double h = half_saturation;
    return {"michaelis", h, [h](double x) { return x / (h + x); },
            [h](double x) { return h / ((h + x) * (h + x)); },
            [h](double x) { return -2.0 * h / ((h + x) * (h + x) * (h + x)); }};
  }

  /// f(I) = 1 - exp(-k I)
  static MediaResponse exp_saturation(double k) {
    return {"exp", k, [k](double x) { return -std::expm1(-k * x); }, [k](double x) { return k * std::exp(-k * x); },
            [k](double x) { return -k * k * std::exp(-k * x); }};
  }
};

/// User-supplied incidence. Only G is mandatory; missing derivatives fall
/// back to finite differences.
struct CustomIncidence {
  std::function<double(double)> G;
  std::function<double(double)> dG;
  std::function<double(double)> d2G;
  double gprime0 = 1.0;
};

enum class IncidenceKind { linear, saturated, nonmonotonic, media1, media2, custom };

/// Nonlinear incidence G(I). Built-in kinds are expressed through the ratio
/// g(I) = G(I)/I, which is smooth at 0 for all of them.
class IncidenceFunction {
 public:
  static IncidenceFunction linear() { return IncidenceFunction(IncidenceKind::linear, 0.0); }
  /// G(I) = I / (1 + a I)
  static IncidenceFunction saturated(double a) { return checked(IncidenceKind::saturated, a, "a"); }
  /// G(I) = I / (1 + a I^2)
  static IncidenceFunction nonmonotonic(double a) { return checked(IncidenceKind::nonmonotonic, a, "a"); }
  /// G(I) = I exp(-m I)
  static IncidenceFunction media1(double m) { return checked(IncidenceKind::media1, m, "m"); }
  /// G(I) = I (1 - c f(I)), c = beta_tilde / beta in [0, 1)
  static IncidenceFunction media2(double c, MediaResponse f) {
    if (!(std::isfinite(c) && c >= 0.0 && c < 1.0))
      throw Error(ErrorKind::invalid_incidence, "media2 ratio beta_tilde must lie in [0, 1)");
    if (!f.f) throw Error(ErrorKind::invalid_incidence, "media2 requires a response function f");
    IncidenceFunction inc(IncidenceKind::media2, c);
    inc.media_ = std::move(f);
    return inc;
  }
  static IncidenceFunction custom(CustomIncidence c) {
    if (!c.G) throw Error(ErrorKind::invalid_incidence, "custom incidence requires G");
    if (!(std::isfinite(c.gprime0) && c.gprime0 > 0.0))
      throw Error(ErrorKind::invalid_incidence, "custom incidence requires G'(0) > 0");
    IncidenceFunction inc(IncidenceKind::custom, 0.0);
    inc.custom_ = std::move(c);
    return inc;
  }

  IncidenceKind kind() const { return kind_; }
  double parameter() const { return param_; }
  const std::optional<MediaResponse>& media_response() const { return media_; }

  std::string name() const {
    switch (kind_) {
      case IncidenceKind::linear: return "linear";
      case IncidenceKind::saturated: return "saturated";
      case IncidenceKind::nonmonotonic: return "nonmonotonic";
      case IncidenceKind::media1: return "media1";
      case IncidenceKind::media2: return "media2";
      case IncidenceKind::custom: return "custom";
    }
    return "unknown";
  }

  /// G'(0)
  double gprime0() const {
    if (kind_ == IncidenceKind::custom) return custom_->gprime0;
    return 1.0;
  }

  /// Whether G' is available in closed form.
  bool has_derivative() const { return kind_ != IncidenceKind::custom || static_cast<bool>(custom_->dG); }
  bool has_second_derivative() const { return kind_ != IncidenceKind::custom || static_cast<bool>(custom_->d2G); }

  double G(double x) const {
    if (kind_ == IncidenceKind::custom) return custom_->G(x);
    return x * ratio(x);
  }

  double dG(double x) const {
    if (kind_ == IncidenceKind::custom) {
      if (custom_->dG) return custom_->dG(x);
      const double h = fd_step(x);
      return (custom_->G(x + h) - custom_->G(std::max(x - h, 0.0))) / (x + h - std::max(x - h, 0.0));
    }
    return ratio(x) + x * ratio_derivative(x);
  }

  double d2G(double x) const {
    if (kind_ == IncidenceKind::custom) {
      if (custom_->d2G) return custom_->d2G(x);
      const double h = 1e-4 * std::max(std::abs(x), 1.0);
      const double lo = std::max(x - h, 0.0);
      return (dG(x + h) - dG(lo)) / (x + h - lo);
    }
    return 2.0 * ratio_derivative(x) + x * ratio_second_derivative(x);
  }

  /// g(x) = G(x)/x with g(0) = G'(0).
  double g(double x) const {
    if (kind_ == IncidenceKind::custom) return x == 0.0 ? custom_->gprime0 : custom_->G(x) / x;
    return ratio(x);
  }

  /// g'(x) when available analytically.
  std::optional<double> g_derivative(double x) const {
    if (kind_ == IncidenceKind::custom) {
      if (!custom_->dG || x == 0.0) return std::nullopt;
      return (x * custom_->dG(x) - custom_->G(x)) / (x * x);
    }
    return ratio_derivative(x);
  }

 private:
  IncidenceFunction(IncidenceKind kind, double param) : kind_(kind), param_(param) {}

  static IncidenceFunction checked(IncidenceKind kind, double value, const char* name) {
    if (!(std::isfinite(value) && value > 0.0))
      throw Error(ErrorKind::invalid_incidence, std::string("incidence parameter ") + name + " must be finite and > 0");
    return IncidenceFunction(kind, value);
  }

  static double fd_step(double x) { return 1e-6 * std::max(std::abs(x), 1.0); }

  double ratio(double x) const {
    switch (kind_) {
      case IncidenceKind::linear: return 1.0;
      case IncidenceKind::saturated: return 1.0 / (1.0 + param_ * x);
      case IncidenceKind::nonmonotonic: return 1.0 / (1.0 + param_ * x * x);
      case IncidenceKind::media1: return std::exp(-param_ * x);
      case IncidenceKind::media2: return 1.0 - param_ * media_->f(x);
      case IncidenceKind::custom: break;
    }
    return 0.0;
  }

  double ratio_derivative(double x) const {
    switch (kind_) {
      case IncidenceKind::linear: return 0.0;
      case IncidenceKind::saturated: {
        const double d = 1.0 + param_ * x;
        return -param_ / (d * d);
      }
      case IncidenceKind::nonmonotonic: {
        const double d = 1.0 + param_ * x * x;
        return -2.0 * param_ * x / (d * d);
      }
      case IncidenceKind::media1: return -param_ * std::exp(-param_ * x);
      case IncidenceKind::media2: return media_->df ? -param_ * media_->df(x) : -param_ * central(media_->f, x);
      case IncidenceKind::custom: break;
    }
    return 0.0;
  }

  double ratio_second_derivative(double x) const {
    switch (kind_) {
      case IncidenceKind::linear: return 0.0;
      case IncidenceKind::saturated: {
        const double d = 1.0 + param_ * x;
        return 2.0 * param_ * param_ / (d * d * d);
      }
      case IncidenceKind::nonmonotonic: {
        const double d = 1.0 + param_ * x * x;
        return (6.0 * param_ * param_ * x * x - 2.0 * param_) / (d * d * d);
      }
      case IncidenceKind::media1: return param_ * param_ * std::exp(-param_ * x);
      case IncidenceKind::media2:
        if (media_->d2f) return -param_ * media_->d2f(x);
        if (media_->df) return -param_ * central(media_->df, x);
        return -param_ * second_central(media_->f, x);
      case IncidenceKind::custom: break;
    }
    return 0.0;
  }

  static double central(const std::function<double(double)>& fn, double x) {
    const double h = fd_step(x);
    const double lo = std::max(x - h, 0.0);
    return (fn(x + h) - fn(lo)) / (x + h - lo);
  }

  static double second_central(const std::function<double(double)>& fn, double x) {
    const double h = 1e-4 * std::max(std::abs(x), 1.0);
    const double c = std::max(x, h);
    return (fn(c + h) - 2.0 * fn(c) + fn(c - h)) / (h * h);
  }

  IncidenceKind kind_;
  double param_;
  std::optional<MediaResponse> media_;
  std::optional<CustomIncidence> custom_;
};

/// G(i); rejects negative arguments.
inline double evaluate_G(const IncidenceFunction& inc, double i_val) {
  if (!(i_val >= 0.0)) throw Error(ErrorKind::domain, "incidence evaluated at negative I");
  return inc.G(i_val);
}

/// g(i) = G(i)/i, continuously extended by g(0) = G'(0).
inline double evaluate_g_ratio(const IncidenceFunction& inc, double i_val) {
  if (!(i_val >= 0.0)) throw Error(ErrorKind::domain, "incidence ratio evaluated at negative I");
  if (i_val == 0.0) return inc.gprime0();
  return inc.g(i_val);
}

struct AssumptionReport {
  bool h1_ok = false;
  bool h2_ok = false;
  /// Lipschitz constant of g on [0, Λ/μ], estimated on the grid.
  double theta_estimate = 0.0;
  bool theta_analytic = false;
  std::size_t grid_n = 0;
  std::vector<std::string> notes;
};

/// Checks H1 and estimates the H2 constant on a uniform grid over [0, Λ/μ].
inline AssumptionReport validate_assumptions(const IncidenceFunction& inc, const ModelParams& p, std::size_t grid_n) {
  if (grid_n < 2) throw Error(ErrorKind::domain, "validate_assumptions needs grid_n >= 2");
  const double upper = p.lambda_in / p.mu;
  if (!(std::isfinite(upper) && upper > 0.0)) throw Error(ErrorKind::domain, "empty domain [0, Lambda/mu]");

  AssumptionReport rep;
  rep.grid_n = grid_n;
  rep.h1_ok = true;
  rep.theta_analytic = inc.g_derivative(upper).has_value();
  const double gp0 = inc.gprime0();
  const double dx = upper / static_cast<double>(grid_n - 1);
  if (std::abs(inc.G(0.0)) > 0.0) {
    rep.h1_ok = false;
    rep.notes.emplace_back("G(0) != 0");
  }
  double theta = 0.0;
  double prev_f = 0.0;
  for (std::size_t k = 0; k < grid_n; ++k) {
    const double x = k + 1 == grid_n ? upper : dx * static_cast<double>(k);
    if (k > 0) {
      const double gx = inc.G(x);
      if (!std::isfinite(gx))
        throw Error(ErrorKind::invalid_incidence, "G is not finite at I=" + std::to_string(x));
      // a few ulps of slack for the bound I*G'(0)
      if (!(gx > 0.0 && gx <= x * gp0 * (1.0 + 8.0 * std::numeric_limits<double>::epsilon()))) {
        if (rep.h1_ok) rep.notes.emplace_back("H1 violated at I=" + std::to_string(x));
        rep.h1_ok = false;
      }
    }
    double slope = 0.0;
    if (auto d = inc.g_derivative(x)) {
      slope = *d;
    } else {
      const double h = 1e-6 * std::max(x, 1.0);
      const double lo = std::max(x - h, 0.0);
      slope = (evaluate_g_ratio(inc, x + h) - evaluate_g_ratio(inc, lo)) / (x + h - lo);
    }
    if (!std::isfinite(slope)) throw Error(ErrorKind::invalid_incidence, "g' is not finite at I=" + std::to_string(x));
    theta = std::max(theta, std::abs(slope));

    if (const auto& media = inc.media_response()) {
      const double fx = media->f(x);
      if (k == 0 && std::abs(fx) > 0.0) {
        rep.h1_ok = false;
        rep.notes.emplace_back("media response f(0) != 0");
      }
      if (k > 0 && fx < prev_f) {
        if (rep.h1_ok) rep.notes.emplace_back("media response f not monotone at I=" + std::to_string(x));
        rep.h1_ok = false;
      }
      prev_f = fx;
    }
  }
  rep.theta_estimate = theta;
  rep.h2_ok = std::isfinite(theta);
  rep.notes.emplace_back("theta is a grid estimate of the Lipschitz constant of g");
  return rep;
}

}  // namespace rsirs
