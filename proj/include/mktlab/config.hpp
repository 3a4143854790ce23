#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mktlab/design.hpp"
#include "mktlab/experiment.hpp"
#include "mktlab/meanfield.hpp"
#include "mktlab/oracle.hpp"
#include "mktlab/sweeps.hpp"

namespace mktlab {

/// Invalid run configuration. `field` is the dotted path of the offending
/// entry, e.g. "market.sigma".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class OutputFormat { json, csv, text };

struct ExecutionBlock {
  std::int64_t n = 0;
  std::uint64_t replications = 0;
  std::uint64_t master_seed = 0;
  SweepMode mode = SweepMode::analytic;
  GteReference gte = GteReference::analytic;

  friend bool operator==(const ExecutionBlock&, const ExecutionBlock&) = default;
};

struct OutputBlock {
  /// Empty picks the subcommand's default.
  std::optional<OutputFormat> format;
  /// "-" is standard output.
  std::string path = "-";

  friend bool operator==(const OutputBlock&, const OutputBlock&) = default;
};

struct SweepBlock {
  SweepAxis axis = SweepAxis::lambda;
  std::vector<double> values;
  std::vector<DesignSpec> designs;

  friend bool operator==(const SweepBlock&, const SweepBlock&) = default;
};

/// Everything a CLI run needs. Blocks a subcommand does not use are ignored.
struct RunConfig {
  std::optional<MarketSpec> market;
  /// The market was given as {phi, phi_tilde, lambda}; it serializes back
  /// the same way.
  bool homogeneous_shorthand = false;
  DesignSpec design = DesignSpec::cr(0.5);
  ExecutionBlock execution;
  OutputBlock output;
  std::optional<SweepBlock> sweep;
  std::optional<Objective> objective;
  std::optional<double> calibrate_target;
  std::optional<TinyMarket> oracle;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Throws ConfigError on malformed input, unknown fields included.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
nlohmann::ordered_json to_json(const RunConfig& config);

std::string_view to_string(OutputFormat format);
std::string_view to_string(GteReference ref);

}  // namespace mktlab
