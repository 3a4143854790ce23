#include "mktlab/sweeps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mktlab {

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::lambda: return "lambda";
    case SweepAxis::allocation: return "allocation";
    case SweepAxis::alpha: return "alpha";
    case SweepAxis::n: return "n";
  }
  return "?";
}

std::string_view to_string(SweepMode mode) {
  switch (mode) {
    case SweepMode::analytic: return "analytic";
    case SweepMode::montecarlo: return "montecarlo";
    case SweepMode::both: return "both";
  }
  return "?";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  for (auto a : {SweepAxis::lambda, SweepAxis::allocation, SweepAxis::alpha, SweepAxis::n})
    if (name == to_string(a)) return a;
  throw std::invalid_argument("unknown sweep axis '" + std::string(name) + "'");
}

SweepMode parse_sweep_mode(std::string_view name) {
  for (auto m : {SweepMode::analytic, SweepMode::montecarlo, SweepMode::both})
    if (name == to_string(m)) return m;
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

std::string_view to_string(Objective objective) {
  switch (objective) {
    case Objective::bias: return "bias";
    case Objective::variance: return "variance";
    case Objective::mse: return "mse";
  }
  return "?";
}

Objective parse_objective(std::string_view name) {
  for (auto o : {Objective::bias, Objective::variance, Objective::mse})
    if (name == to_string(o)) return o;
  throw std::invalid_argument("unknown objective '" + std::string(name) + "'");
}

void SweepPlan::validate() const {
  base.validate();
  if (values.empty()) throw std::invalid_argument("values: must be nonempty");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("values: must be finite");
  if (!std::is_sorted(values.begin(), values.end()))
    throw std::invalid_argument("values: must be sorted ascending");
  if (axis == SweepAxis::n)
    for (double v : values)
      if (v < 1.0 || v != std::floor(v))
        throw std::invalid_argument("values: n axis needs positive integers");
  if (designs.empty()) throw std::invalid_argument("designs: must be nonempty");
  for (const auto& d : designs)
    if (!d.randomized()) throw std::invalid_argument("designs: sweeps take cr or lr designs");
  if (mode != SweepMode::analytic) {
    if (n < 1 && axis != SweepAxis::n) throw std::invalid_argument("n: required for montecarlo mode");
    if (replications < 2) throw std::invalid_argument("replications: need at least 2");
  }
}

namespace {

struct Cell {
  MarketSpec spec;
  DesignSpec design;
  std::int64_t n = 0;
};

Cell make_cell(const SweepPlan& plan, double value, const DesignSpec& design) {
  Cell c{plan.base, design, plan.n};
  switch (plan.axis) {
    case SweepAxis::lambda:
      c.spec.lambda = value;
      break;
    case SweepAxis::allocation:
      c.design.allocation = value;
      break;
    case SweepAxis::alpha:
      c.spec.phi_treatment = c.spec.phi_control;
      for (std::size_t g = 0; g < c.spec.phi_treatment.rows(); ++g)
        for (double& x : c.spec.phi_treatment.row(g)) x *= value;
      break;
    case SweepAxis::n:
      c.n = static_cast<std::int64_t>(value);
      break;
  }
  c.spec.validate();
  c.design.validate();
  return c;
}

std::optional<double> homogeneous_scaled_variance(const MarketSpec& spec, const DesignSpec& d) {
  if (!spec.is_homogeneous()) return std::nullopt;
  const double phi = spec.phi_control(0, 0);
  const double phi_t = spec.phi_treatment(0, 0);
  if (d.kind == DesignKind::customer_randomized)
    return cr_variance_limit(phi, phi_t, spec.lambda, d.allocation).total;
  return lr_variance_limit(phi, phi_t, spec.lambda, d.allocation).total;
}

void fill_band(SweepRow& row, const MarketSpec& spec) {
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 1; i <= 9; ++i) {
    DesignSpec d = row.design;
    d.allocation = i / 10.0;
    const double b = asymptotic_bias(spec, d).bias;
    lo = std::min(lo, b);
    hi = std::max(hi, b);
  }
  row.bias_low = lo;
  row.bias_high = hi;
}

}  // namespace

SweepRow evaluate_analytic(const MarketSpec& spec, const DesignSpec& design, std::int64_t n) {
  SweepRow row;
  row.design = design;
  row.lambda = spec.lambda;
  row.n = n;
  const auto report = asymptotic_bias(spec, design);
  row.estimate = report.estimator_limit;
  row.gte = report.gte_limit;
  row.bias = report.bias;
  row.relative_bias = report.relative_bias;
  row.scaled_variance = homogeneous_scaled_variance(spec, design);
  if (row.scaled_variance && n > 0) {
    const double var = *row.scaled_variance / static_cast<double>(n);
    row.sd = std::sqrt(var);
    row.mse = row.bias * row.bias + var;
  }
  fill_band(row, spec);
  return row;
}

SweepRow evaluate_montecarlo(const MarketSpec& spec, const DesignSpec& design, std::int64_t n,
                             std::uint64_t replications, std::uint64_t master_seed,
                             GteReference gte, unsigned threads) {
  const auto s = run_replications(spec, design, n, replications, master_seed, {gte, threads});
  SweepRow row;
  row.design = design;
  row.lambda = spec.lambda;
  row.n = n;
  row.monte_carlo = true;
  row.replications = replications;
  row.estimate = s.estimator_mean;
  row.gte = s.gte_reference;
  row.bias = s.bias;
  row.relative_bias = s.relative_bias;
  row.sd = s.estimator_sd;
  row.mse = s.mse;
  row.scaled_variance = s.scaled_variance;
  return row;
}

std::vector<SweepRow> run_sweep(const SweepPlan& plan, unsigned threads) {
  plan.validate();
  std::vector<SweepRow> rows;
  for (double value : plan.values) {
    for (const auto& design : plan.designs) {
      std::vector<bool> sources;
      if (plan.mode != SweepMode::montecarlo) sources.push_back(false);
      if (plan.mode != SweepMode::analytic) sources.push_back(true);
      for (bool mc : sources) {
        SweepRow row;
        try {
          const Cell cell = make_cell(plan, value, design);
          row = mc ? evaluate_montecarlo(cell.spec, cell.design, cell.n, plan.replications,
                                         plan.master_seed, plan.gte, threads)
                   : evaluate_analytic(cell.spec, cell.design, cell.n);
        } catch (const std::exception& e) {
          row = SweepRow{};
          row.design = design;
          if (plan.axis == SweepAxis::allocation) row.design.allocation = value;
          row.lambda = plan.axis == SweepAxis::lambda ? value : plan.base.lambda;
          row.n = plan.axis == SweepAxis::n ? static_cast<std::int64_t>(value) : plan.n;
          row.monte_carlo = mc;
          row.replications = mc ? plan.replications : 0;
          row.estimate = row.gte = row.bias = NAN;
          row.error = e.what();
        }
        row.axis = plan.axis;
        row.axis_value = value;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

Recommendation recommend_design(const MarketSpec& spec, Objective objective,
                                std::optional<std::int64_t> n) {
  spec.validate();
  if (objective == Objective::mse && (!n || *n < 1))
    throw std::invalid_argument("n: the mse objective requires a market size");
  if (objective != Objective::bias && !spec.is_homogeneous())
    throw std::domain_error(
        "variance unavailable analytically for heterogeneous markets; use montecarlo mode");

  std::optional<Recommendation> best;
  auto better = [](const Recommendation& cand, const Recommendation& cur) {
    const double tol = 1e-12 * std::max(1.0, std::abs(cur.objective_value));
    if (cand.objective_value < cur.objective_value - tol) return true;
    if (cand.objective_value > cur.objective_value + tol) return false;
    const double dc = std::abs(cand.design.allocation - 0.5);
    const double dk = std::abs(cur.design.allocation - 0.5);
    if (dc < dk - 1e-12) return true;
    if (dc > dk + 1e-12) return false;
    return cand.design.kind == DesignKind::customer_randomized &&
           cur.design.kind != DesignKind::customer_randomized;
  };

  for (auto kind : {DesignKind::customer_randomized, DesignKind::listing_randomized}) {
    for (double a : allocation_grid()) {
      if (a < 0.05 - 1e-12 || a > 0.95 + 1e-12) continue;
      Recommendation r;
      r.design = {kind, a};
      r.objective = objective;
      r.bias = asymptotic_bias(spec, r.design).bias;
      r.scaled_variance = homogeneous_scaled_variance(spec, r.design);
      if (n && r.scaled_variance) {
        const double var = *r.scaled_variance / static_cast<double>(*n);
        r.sd = std::sqrt(var);
        r.mse = r.bias * r.bias + var;
      }
      switch (objective) {
        case Objective::bias: r.objective_value = std::abs(r.bias); break;
        case Objective::variance: r.objective_value = *r.scaled_variance; break;
        case Objective::mse: r.objective_value = *r.mse; break;
      }
      if (!best || better(r, *best)) best = r;
    }
  }
  return *best;
}

}  // namespace mktlab
