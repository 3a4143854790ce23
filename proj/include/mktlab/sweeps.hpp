#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mktlab/design.hpp"
#include "mktlab/experiment.hpp"
#include "mktlab/meanfield.hpp"

namespace mktlab {

enum class SweepAxis { lambda, allocation, alpha, n };
enum class SweepMode { analytic, montecarlo, both };

std::string_view to_string(SweepAxis axis);
std::string_view to_string(SweepMode mode);
SweepAxis parse_sweep_axis(std::string_view name);
SweepMode parse_sweep_mode(std::string_view name);

/// One swept axis over a base market. The alpha axis sets the treatment
/// matrix to alpha times the control matrix.
struct SweepPlan {
  MarketSpec base;
  SweepAxis axis = SweepAxis::lambda;
  std::vector<double> values;
  /// Randomized designs only.
  std::vector<DesignSpec> designs;
  SweepMode mode = SweepMode::analytic;
  /// Market size for Monte Carlo cells and for the analytic sd/mse columns.
  std::int64_t n = 0;
  std::uint64_t replications = 0;
  std::uint64_t master_seed = 0;
  GteReference gte = GteReference::analytic;

  void validate() const;
};

struct SweepRow {
  /// Empty for a single run outside a sweep.
  std::optional<SweepAxis> axis;
  std::optional<double> axis_value;
  DesignSpec design;
  double lambda = 0.0;
  std::int64_t n = 0;
  /// Zero for analytic rows.
  std::uint64_t replications = 0;
  bool monte_carlo = false;
  double estimate = 0.0;
  double gte = 0.0;
  double bias = 0.0;
  std::optional<double> relative_bias;
  std::optional<double> sd;
  std::optional<double> mse;
  std::optional<double> scaled_variance;
  /// Analytic bias range over allocations 0.1, 0.2, ..., 0.9 for this design.
  std::optional<double> bias_low;
  std::optional<double> bias_high;
  /// Empty when the cell succeeded.
  std::string error;
};

/// Single analytic cell. sd and mse need n > 0 and a homogeneous market.
SweepRow evaluate_analytic(const MarketSpec& spec, const DesignSpec& design, std::int64_t n);
/// Single Monte Carlo cell.
SweepRow evaluate_montecarlo(const MarketSpec& spec, const DesignSpec& design, std::int64_t n,
                             std::uint64_t replications, std::uint64_t master_seed,
                             GteReference gte, unsigned threads = 0);

/// One row per axis value x design (x source in `both` mode), in axis order.
/// Failing cells become rows with `error` set.
std::vector<SweepRow> run_sweep(const SweepPlan& plan, unsigned threads = 0);

enum class Objective { bias, variance, mse };
std::string_view to_string(Objective objective);
Objective parse_objective(std::string_view name);

struct Recommendation {
  DesignSpec design;
  Objective objective = Objective::bias;
  double objective_value = 0.0;
  double bias = 0.0;
  std::optional<double> scaled_variance;
  std::optional<double> sd;
  std::optional<double> mse;
};

/// Grid search over {CR, LR} x allocations 0.05..0.95. Ties go to the
/// allocation nearest 0.5, then to CR. Variance-based objectives need a
/// homogeneous market; mse also needs n.
Recommendation recommend_design(const MarketSpec& spec, Objective objective,
                                std::optional<std::int64_t> n = std::nullopt);

}  // namespace mktlab
