#include "mktlab/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <boost/math/tools/roots.hpp>

namespace mktlab {

namespace {

constexpr double kMassTolerance = 1e-12;

void check_masses(const std::vector<double>& masses, const std::vector<std::string>& labels,
                  const char* field, const char* label_field) {
  if (masses.empty()) throw std::invalid_argument(std::string(field) + ": must be nonempty");
  if (masses.size() != labels.size())
    throw std::invalid_argument(std::string(label_field) + ": expected " +
                                std::to_string(masses.size()) + " labels");
  double total = 0.0;
  for (double m : masses) {
    if (!std::isfinite(m) || m <= 0.0)
      throw std::invalid_argument(std::string(field) + ": masses must be positive and finite");
    total += m;
  }
  if (std::abs(total - 1.0) > kMassTolerance)
    throw std::invalid_argument(std::string(field) + ": masses must sum to 1");
}

void check_rates(const Matrix& m, std::size_t rows, std::size_t cols, const char* field) {
  if (m.rows() != rows || m.cols() != cols)
    throw std::invalid_argument(std::string(field) + ": expected " + std::to_string(rows) + "x" +
                                std::to_string(cols) + " matrix");
  for (double v : m.values())
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument(std::string(field) + ": entries must be finite and >= 0");
}

void check_allocation(double a, const char* name) {
  if (!(a > 0.0 && a < 1.0))
    throw std::domain_error(std::string(name) + " must lie in (0,1)");
}

// tau . row for every customer type.
std::vector<double> row_loads(const MarketSpec& spec, const Matrix& phi) {
  std::vector<double> out(phi.rows());
  for (std::size_t g = 0; g < phi.rows(); ++g) {
    auto r = phi.row(g);
    out[g] = std::inner_product(r.begin(), r.end(), spec.tau.begin(), 0.0);
  }
  return out;
}

// lambda * sigma . column for every listing type.
std::vector<double> column_loads(const MarketSpec& spec, const Matrix& psi) {
  std::vector<double> out(psi.cols(), 0.0);
  for (std::size_t g = 0; g < psi.rows(); ++g)
    for (std::size_t t = 0; t < psi.cols(); ++t) out[t] += spec.sigma[g] * psi(g, t);
  for (double& v : out) v *= spec.lambda;
  return out;
}

}  // namespace

MarketSpec MarketSpec::homogeneous(double phi, double phi_treatment, double lambda) {
  MarketSpec spec;
  spec.customer_types = {"customer"};
  spec.listing_types = {"listing"};
  spec.sigma = {1.0};
  spec.tau = {1.0};
  spec.lambda = lambda;
  spec.phi_control = Matrix(1, 1, phi);
  spec.phi_treatment = Matrix(1, 1, phi_treatment);
  return spec;
}

void MarketSpec::validate() const {
  check_masses(sigma, customer_types, "sigma", "customer_types");
  check_masses(tau, listing_types, "tau", "listing_types");
  if (!std::isfinite(lambda) || lambda <= 0.0)
    throw std::invalid_argument("lambda: must be positive and finite");
  check_rates(phi_control, sigma.size(), tau.size(), "phi_control");
  check_rates(phi_treatment, sigma.size(), tau.size(), "phi_treatment");
}

double f_poisson_serve(double x) {
  if (!std::isfinite(x) || x < 0.0) throw std::domain_error("F requires finite x >= 0");
  if (x < 1e-6) return 1.0 - x / 2.0 + x * x / 6.0;
  return -std::expm1(-x) / x;
}

double f_poisson_serve_derivative(double x) {
  if (!std::isfinite(x) || x < 0.0) throw std::domain_error("F' requires finite x >= 0");
  if (x < 1e-2) {
    // -1/2 + x/3 - x^2/8 + x^3/30 - x^4/144 + x^5/840
    return -0.5 + x * (1.0 / 3 + x * (-1.0 / 8 + x * (1.0 / 30 + x * (-1.0 / 144 + x / 840))));
  }
  return (std::exp(-x) - f_poisson_serve(x)) / x;
}

Matrix application_rates(const MarketSpec& spec, Arm arm) {
  const Matrix& phi = spec.phi(arm);
  const auto loads = row_loads(spec, phi);
  Matrix psi(phi.rows(), phi.cols(), 0.0);
  for (std::size_t g = 0; g < phi.rows(); ++g) {
    if (loads[g] == 0.0) continue;  // zero row by continuity
    const double f = f_poisson_serve(loads[g]);
    for (std::size_t t = 0; t < phi.cols(); ++t) psi(g, t) = phi(g, t) * f;
  }
  return psi;
}

Matrix booking_rates(const MarketSpec& spec, const Matrix& psi) {
  if (psi.rows() != spec.sigma.size() || psi.cols() != spec.tau.size())
    throw std::invalid_argument("booking_rates: psi dimensions do not match the market");
  const auto loads = column_loads(spec, psi);
  Matrix omega(psi.rows(), psi.cols(), 0.0);
  for (std::size_t t = 0; t < psi.cols(); ++t) {
    if (loads[t] == 0.0) continue;
    const double f = f_poisson_serve(loads[t]);
    for (std::size_t g = 0; g < psi.rows(); ++g) omega(g, t) = psi(g, t) * f;
  }
  return omega;
}

RateMatrices rate_matrices(const MarketSpec& spec, Arm arm) {
  Matrix psi = application_rates(spec, arm);
  Matrix omega = booking_rates(spec, psi);
  return {std::move(psi), std::move(omega)};
}

double limit_booking_rate(const MarketSpec& spec, Arm arm) {
  const auto loads = column_loads(spec, application_rates(spec, arm));
  double total = 0.0;
  for (std::size_t t = 0; t < loads.size(); ++t) total += spec.tau[t] * -std::expm1(-loads[t]);
  return total;
}

double gte_limit(const MarketSpec& spec) {
  return limit_booking_rate(spec, Arm::treatment) - limit_booking_rate(spec, Arm::control);
}

double cr_estimator_limit(const MarketSpec& spec, double a_c) {
  check_allocation(a_c, "a_c");
  const Matrix psi = application_rates(spec, Arm::control);
  const Matrix psi_t = application_rates(spec, Arm::treatment);
  double total = 0.0;
  for (std::size_t t = 0; t < psi.cols(); ++t) {
    double lift = 0.0;
    double mixed = 0.0;
    for (std::size_t g = 0; g < psi.rows(); ++g) {
      lift += spec.sigma[g] * (psi_t(g, t) - psi(g, t));
      mixed += spec.sigma[g] * (a_c * psi_t(g, t) + (1.0 - a_c) * psi(g, t));
    }
    total += spec.tau[t] * spec.lambda * lift * f_poisson_serve(spec.lambda * mixed);
  }
  return total;
}

double lr_estimator_limit(const MarketSpec& spec, double a_l) {
  check_allocation(a_l, "a_l");
  Matrix mixed(spec.phi_control.rows(), spec.phi_control.cols());
  for (std::size_t g = 0; g < mixed.rows(); ++g)
    for (std::size_t t = 0; t < mixed.cols(); ++t)
      mixed(g, t) = a_l * spec.phi_treatment(g, t) + (1.0 - a_l) * spec.phi_control(g, t);
  std::vector<double> serve = row_loads(spec, mixed);
  for (double& v : serve) v = f_poisson_serve(v);

  double total = 0.0;
  for (std::size_t t = 0; t < mixed.cols(); ++t) {
    double load_c = 0.0;
    double load_t = 0.0;
    for (std::size_t g = 0; g < mixed.rows(); ++g) {
      load_c += spec.sigma[g] * spec.phi_control(g, t) * serve[g];
      load_t += spec.sigma[g] * spec.phi_treatment(g, t) * serve[g];
    }
    total += spec.tau[t] * (std::exp(-spec.lambda * load_c) - std::exp(-spec.lambda * load_t));
  }
  return total;
}

BiasReport asymptotic_bias(const MarketSpec& spec, const DesignSpec& design) {
  design.validate();
  BiasReport report;
  switch (design.kind) {
    case DesignKind::customer_randomized:
      report.estimator_limit = cr_estimator_limit(spec, design.allocation);
      break;
    case DesignKind::listing_randomized:
      report.estimator_limit = lr_estimator_limit(spec, design.allocation);
      break;
    default:
      throw std::invalid_argument("asymptotic bias is defined for cr and lr designs only");
  }
  report.gte_limit = gte_limit(spec);
  report.bias = report.estimator_limit - report.gte_limit;
  if (report.gte_limit != 0.0) report.relative_bias = report.bias / report.gte_limit;
  return report;
}

double bias_differential_bound(const MarketSpec& spec) {
  double lift = 0.0;
  const auto& c = spec.phi_control.values();
  const auto& t = spec.phi_treatment.values();
  for (std::size_t i = 0; i < c.size(); ++i) lift = std::max(lift, std::abs(t[i] - c[i]));
  return spec.lambda * spec.lambda * lift * lift;
}

namespace homogeneous {

double booking_rate(double phi, double lambda) {
  return -std::expm1(-lambda * -std::expm1(-phi));
}

double gte(double phi, double phi_t, double lambda) {
  return booking_rate(phi_t, lambda) - booking_rate(phi, lambda);
}

double cr_limit(double phi, double phi_t, double lambda, double a_c) {
  check_allocation(a_c, "a_c");
  const double psi = -std::expm1(-phi);
  const double psi_t = -std::expm1(-phi_t);
  return lambda * (psi_t - psi) * f_poisson_serve(lambda * (a_c * psi_t + (1.0 - a_c) * psi));
}

double lr_limit(double phi, double phi_t, double lambda, double a_l) {
  if (!(a_l >= 0.0 && a_l <= 1.0)) throw std::domain_error("a_l must lie in [0,1]");
  const double serve = f_poisson_serve(a_l * phi_t + (1.0 - a_l) * phi);
  return std::exp(-lambda * phi * serve) - std::exp(-lambda * phi_t * serve);
}

}  // namespace homogeneous

std::optional<double> find_lambda_star(double phi, double phi_t) {
  if (!(phi > 0.0 && phi_t > 0.0) || !std::isfinite(phi) || !std::isfinite(phi_t))
    throw std::domain_error("find_lambda_star requires positive finite rates");
  if (phi == phi_t) throw std::domain_error("find_lambda_star requires phi != phi_t");

  const double f_lo = f_poisson_serve(phi);
  const double f_hi = f_poisson_serve(phi_t);
  // LR limit at a=0 minus LR limit at a=1, rescaled by e^{min exponent} so the
  // sign survives when every exponential underflows.
  auto endpoint_gap = [&](double lambda) {
    const double e0c = lambda * phi * f_lo, e0t = lambda * phi_t * f_lo;
    const double e1c = lambda * phi * f_hi, e1t = lambda * phi_t * f_hi;
    const double lo = std::min({e0c, e0t, e1c, e1t});
    const double at0 = -std::exp(lo - e0c) * std::expm1(e0c - e0t);
    const double at1 = -std::exp(lo - e1c) * std::expm1(e1c - e1t);
    return at0 - at1;
  };

  constexpr double kLo = 1e-6, kHi = 1e4;
  const double g_lo = endpoint_gap(kLo);
  const double g_hi = endpoint_gap(kHi);
  if (g_lo == 0.0) return kLo;
  if (g_hi == 0.0) return kHi;
  if ((g_lo > 0.0) == (g_hi > 0.0)) return std::nullopt;

  auto done = [](double a, double b) { return b - a <= 1e-9; };
  const auto [a, b] = boost::math::tools::bisect(endpoint_gap, kLo, kHi, done);
  return 0.5 * (a + b);
}

std::span<const double> allocation_grid() {
  static const std::vector<double> grid = [] {
    std::vector<double> g(99);
    for (int i = 0; i < 99; ++i) g[i] = (i + 1) / 100.0;
    return g;
  }();
  return grid;
}

double variance_approx_ratio(double phi, double phi_t, double lambda, DesignKind kind) {
  auto total = [&](double a) {
    switch (kind) {
      case DesignKind::customer_randomized:
        return cr_variance_limit(phi, phi_t, lambda, a).total;
      case DesignKind::listing_randomized:
        return lr_variance_limit(phi, phi_t, lambda, a).total;
      default:
        throw std::invalid_argument("variance ratio is defined for cr and lr designs only");
    }
  };
  double best = total(0.5);
  const double at_half = best;
  for (double a : allocation_grid()) best = std::min(best, total(a));
  return at_half / best;
}

double calibrate_phi(double target, double lambda) {
  if (!std::isfinite(lambda) || lambda <= 0.0)
    throw std::domain_error("calibrate_phi: lambda must be positive");
  if (!(target > 0.0 && target < 1.0))
    throw std::domain_error("calibrate_phi: target must lie in (0,1)");
  const double supremum = -std::expm1(-lambda);
  if (target >= supremum)
    throw std::domain_error("calibrate_phi: target " + std::to_string(target) +
                            " is not achievable; booking rates at lambda=" +
                            std::to_string(lambda) + " stay below " + std::to_string(supremum));

  constexpr double kLo = 1e-9, kHi = 50.0;
  auto residual = [&](double phi) { return homogeneous::booking_rate(phi, lambda) - target; };
  if (residual(kLo) >= 0.0) return kLo;
  if (residual(kHi) < 0.0)
    throw std::domain_error("calibrate_phi: target exceeds the rate reachable with phi <= 50");
  auto done = [](double a, double b) { return b - a <= 1e-10; };
  const auto [a, b] = boost::math::tools::bisect(residual, kLo, kHi, done);
  return 0.5 * (a + b);
}

}  // namespace mktlab
