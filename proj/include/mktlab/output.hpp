#pragma once

#include <ostream>
#include <span>
#include <string>

#include "json.hpp"
#include "mktlab/experiment.hpp"
#include "mktlab/meanfield.hpp"
#include "mktlab/oracle.hpp"
#include "mktlab/sweeps.hpp"

namespace mktlab {

/// 17 significant digits; "null" for non-finite values.
std::string format_number(double x);

/// Pretty JSON with every floating-point value at 17 significant digits.
std::string dump_json(const nlohmann::ordered_json& doc, int indent = 2);

/// Fixed column order; the header line is always written.
void write_csv(std::ostream& out, std::span<const SweepRow> rows);
extern const char* const kCsvHeader;

nlohmann::ordered_json to_json(const SweepRow& row);
nlohmann::ordered_json to_json(const RunSummary& summary);
nlohmann::ordered_json to_json(const BiasReport& report);
nlohmann::ordered_json to_json(const ExactExpectations& exact);

}  // namespace mktlab
