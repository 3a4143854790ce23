#pragma once

// Large-market limits of booking rates, estimator expectations, biases and
// scaled variances. Everything here is a pure function of its arguments.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mktlab/design.hpp"
#include "mktlab/matrix.hpp"

namespace mktlab {

/// Limiting market: type masses, relative demand and the consideration-rate
/// matrices under control and treatment (rows are customer types, columns
/// listing types).
struct MarketSpec {
  std::vector<std::string> customer_types;
  std::vector<std::string> listing_types;
  std::vector<double> sigma;
  std::vector<double> tau;
  double lambda = 1.0;
  Matrix phi_control;
  Matrix phi_treatment;

  /// One customer type and one listing type.
  static MarketSpec homogeneous(double phi, double phi_treatment, double lambda);

  bool is_homogeneous() const { return sigma.size() == 1 && tau.size() == 1; }
  const Matrix& phi(Arm arm) const {
    return arm == Arm::treatment ? phi_treatment : phi_control;
  }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  friend bool operator==(const MarketSpec&, const MarketSpec&) = default;
};

struct RateMatrices {
  Matrix psi;    // application rates
  Matrix omega;  // booking rates
};

struct BiasReport {
  double estimator_limit = 0.0;
  double gte_limit = 0.0;
  double bias = 0.0;
  /// Empty when the GTE limit is exactly zero.
  std::optional<double> relative_bias;
};

/// (1 - e^-x) / x, continuous at 0. Throws std::domain_error for negative or
/// non-finite x.
double f_poisson_serve(double x);
/// Derivative of f_poisson_serve.
double f_poisson_serve_derivative(double x);

Matrix application_rates(const MarketSpec& spec, Arm arm);
Matrix booking_rates(const MarketSpec& spec, const Matrix& psi);
RateMatrices rate_matrices(const MarketSpec& spec, Arm arm);

/// Limit of bookings per listing under a global design.
double limit_booking_rate(const MarketSpec& spec, Arm arm);
double gte_limit(const MarketSpec& spec);
double cr_estimator_limit(const MarketSpec& spec, double a_c);
double lr_estimator_limit(const MarketSpec& spec, double a_l);

/// Only defined for the randomized designs.
BiasReport asymptotic_bias(const MarketSpec& spec, const DesignSpec& design);

/// lambda^2 * (largest absolute lift |phi_t - phi|)^2.
double bias_differential_bound(const MarketSpec& spec);

/// Closed forms for one customer type and one listing type.
namespace homogeneous {

double booking_rate(double phi, double lambda);
double gte(double phi, double phi_t, double lambda);
double cr_limit(double phi, double phi_t, double lambda, double a_c);
/// Defined on the closed interval; the endpoints are continuity limits.
double lr_limit(double phi, double phi_t, double lambda, double a_l);

}  // namespace homogeneous

/// Relative demand at which the LR bias has equal magnitude at both allocation
/// endpoints. Empty when the endpoint difference does not change sign on
/// [1e-6, 1e4].
std::optional<double> find_lambda_star(double phi, double phi_t);

struct LrVariance {
  double total = 0.0;
  double vt = 0.0;
  double vc = 0.0;
  double cv = 0.0;
};

struct CrVariance {
  double total = 0.0;
  double vt = 0.0;
  double vc = 0.0;
  double cvtt = 0.0;
  double cvcc = 0.0;
  double cvtc = 0.0;
};

/// N * Var of the LR estimator in the limit, homogeneous market.
LrVariance lr_variance_limit(double phi, double phi_t, double lambda, double a_l);
/// N * Var of the CR estimator in the limit, homogeneous market.
CrVariance cr_variance_limit(double phi, double phi_t, double lambda, double a_c);

/// Allocations 0.01, 0.02, ..., 0.99.
std::span<const double> allocation_grid();

/// Scaled variance at allocation 0.5 over its minimum on allocation_grid().
double variance_approx_ratio(double phi, double phi_t, double lambda, DesignKind kind);

/// Homogeneous phi whose global booking rate at `lambda` equals `target`.
/// Throws std::domain_error when target is not below 1 - e^-lambda.
double calibrate_phi(double target_booking_rate, double lambda);

}  // namespace mktlab
