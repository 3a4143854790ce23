#include <cmath>
#include <stdexcept>

#include "mktlab/meanfield.hpp"

namespace mktlab {

namespace {

void check_homogeneous(double phi, double phi_t, double lambda, double a) {
  if (!std::isfinite(phi) || phi < 0.0 || !std::isfinite(phi_t) || phi_t < 0.0)
    throw std::domain_error("consideration rates must be finite and >= 0");
  if (!std::isfinite(lambda) || lambda <= 0.0) throw std::domain_error("lambda must be positive");
  if (!(a > 0.0 && a < 1.0)) throw std::domain_error("allocation must lie in (0,1)");
}

}  // namespace

LrVariance lr_variance_limit(double phi, double phi_t, double lambda, double a_l) {
  check_homogeneous(phi, phi_t, lambda, a_l);
  const double serve = f_poisson_serve((1.0 - a_l) * phi + a_l * phi_t);
  const double idle_t = std::exp(-lambda * phi_t * serve);
  const double idle_c = std::exp(-lambda * phi * serve);
  LrVariance v;
  v.vt = idle_t * -std::expm1(-lambda * phi_t * serve) / a_l;
  v.vc = idle_c * -std::expm1(-lambda * phi * serve) / (1.0 - a_l);
  const double spread = phi_t * idle_t - phi * idle_c;
  v.cv = -lambda * serve * serve * spread * spread;
  v.total = v.vt + v.vc + v.cv;
  return v;
}

// Treated bookings per listing converge to e1 = m1 F(m1 + m0), control to
// e0 = m0 F(m1 + m0), with m1 = lambda a psi_t and m0 = lambda (1-a) psi the
// application loads. The covariance terms come from the fluctuation of each
// load, whose variance per listing is lambda * share * psi^2 below its Poisson
// value.
CrVariance cr_variance_limit(double phi, double phi_t, double lambda, double a_c) {
  check_homogeneous(phi, phi_t, lambda, a_c);
  const double psi = -std::expm1(-phi);
  const double psi_t = -std::expm1(-phi_t);
  const double m1 = lambda * a_c * psi_t;
  const double m0 = lambda * (1.0 - a_c) * psi;
  const double m = m1 + m0;
  const double f = f_poisson_serve(m);
  const double fp = f_poisson_serve_derivative(m);

  const double e1 = m1 * f;
  const double e0 = m0 * f;
  const double d1_e1 = f + m1 * fp;
  const double d0_e1 = m1 * fp;
  const double d0_e0 = f + m0 * fp;
  const double d1_e0 = m0 * fp;
  const double w1 = lambda * a_c * psi_t * psi_t;
  const double w0 = lambda * (1.0 - a_c) * psi * psi;

  const double a = a_c;
  const double b = 1.0 - a_c;
  CrVariance v;
  v.vt = e1 * (1.0 - e1) / (a * a);
  v.vc = e0 * (1.0 - e0) / (b * b);
  v.cvtt = -(d1_e1 * d1_e1 * w1 + d0_e1 * d0_e1 * w0) / (a * a);
  v.cvcc = -(d1_e0 * d1_e0 * w1 + d0_e0 * d0_e0 * w0) / (b * b);
  v.cvtc = 2.0 * (e1 * e0 + d1_e1 * d1_e0 * w1 + d0_e1 * d0_e0 * w0) / (a * b);
  v.total = v.vt + v.vc + v.cvtt + v.cvcc + v.cvtc;
  return v;
}

}  // namespace mktlab
