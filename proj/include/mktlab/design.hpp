#pragma once

#include <string>
#include <string_view>

namespace mktlab {

enum class Arm { control, treatment };

enum class DesignKind { global_control, global_treatment, customer_randomized, listing_randomized };

/// Experimental design. `allocation` is the treated fraction and is ignored
/// for the global kinds.
struct DesignSpec {
  DesignKind kind = DesignKind::global_control;
  double allocation = 0.5;

  static DesignSpec global_control() { return {DesignKind::global_control, 0.5}; }
  static DesignSpec global_treatment() { return {DesignKind::global_treatment, 0.5}; }
  static DesignSpec cr(double a) { return {DesignKind::customer_randomized, a}; }
  static DesignSpec lr(double a) { return {DesignKind::listing_randomized, a}; }

  bool randomized() const {
    return kind == DesignKind::customer_randomized || kind == DesignKind::listing_randomized;
  }

  /// Throws std::domain_error when a randomized design has allocation outside (0,1).
  void validate() const;

  friend bool operator==(const DesignSpec&, const DesignSpec&) = default;
};

/// "gc", "gt", "cr", "lr".
std::string_view to_string(DesignKind kind);
/// Accepts the short names above plus the long forms ("global_control", ...).
/// Throws std::invalid_argument on anything else.
DesignKind parse_design_kind(std::string_view name);

}  // namespace mktlab
