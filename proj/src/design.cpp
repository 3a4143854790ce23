#include "mktlab/design.hpp"

#include <stdexcept>
#include <string>

namespace mktlab {

void DesignSpec::validate() const {
  if (randomized() && !(allocation > 0.0 && allocation < 1.0))
    throw std::domain_error("allocation must lie in (0,1), got " + std::to_string(allocation));
}

std::string_view to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::global_control: return "gc";
    case DesignKind::global_treatment: return "gt";
    case DesignKind::customer_randomized: return "cr";
    case DesignKind::listing_randomized: return "lr";
  }
  return "?";
}

DesignKind parse_design_kind(std::string_view name) {
  if (name == "gc" || name == "global_control") return DesignKind::global_control;
  if (name == "gt" || name == "global_treatment") return DesignKind::global_treatment;
  if (name == "cr" || name == "customer_randomized") return DesignKind::customer_randomized;
  if (name == "lr" || name == "listing_randomized") return DesignKind::listing_randomized;
  throw std::invalid_argument("unknown design kind '" + std::string(name) + "'");
}

}  // namespace mktlab
