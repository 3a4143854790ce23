#include "mktlab/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mktlab {

const char* const kCsvHeader =
    "axis,design,allocation,lambda,n,reps,est,gte,bias,rel_bias,sd,mse,scaled_var,"
    "axis_value,source,bias_lo,bias_hi,status";

std::string format_number(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

void dump(std::string& out, const nlohmann::ordered_json& j, int indent, int depth) {
  using value_t = nlohmann::ordered_json::value_t;
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        out += nlohmann::ordered_json(it.key()).dump();
        out += ": ";
        dump(out, it.value(), indent, depth + 1);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::none_of(j.begin(), j.end(),
                                     [](const auto& e) { return e.is_structured(); });
      out += flat ? "[" : "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",\n";
        first = false;
        if (!flat) out += pad;
        dump(out, e, indent, depth + 1);
      }
      out += flat ? "]" : "\n" + close_pad + "]";
      return;
    }
    case value_t::number_float:
      out += format_number(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

std::string csv_number(double x) { return std::isfinite(x) ? format_number(x) : ""; }
std::string csv_number(const std::optional<double>& x) { return x ? csv_number(*x) : ""; }

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

void put_optional(nlohmann::ordered_json& j, const char* key, const std::optional<double>& v) {
  if (v)
    j[key] = *v;
  else
    j[key] = nullptr;
}

}  // namespace

std::string dump_json(const nlohmann::ordered_json& doc, int indent) {
  std::string out;
  dump(out, doc, indent, 0);
  out += "\n";
  return out;
}

void write_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << kCsvHeader << "\n";
  for (const auto& r : rows) {
    out << (r.axis ? to_string(*r.axis) : "none") << ',' << to_string(r.design.kind) << ','
        << (r.design.randomized() ? csv_number(r.design.allocation) : "") << ','
        << csv_number(r.lambda) << ',' << r.n << ',' << r.replications << ','
        << csv_number(r.estimate) << ',' << csv_number(r.gte) << ',' << csv_number(r.bias) << ','
        << csv_number(r.relative_bias) << ',' << csv_number(r.sd) << ',' << csv_number(r.mse)
        << ',' << csv_number(r.scaled_variance) << ',' << csv_number(r.axis_value) << ','
        << (r.monte_carlo ? "montecarlo" : "analytic") << ',' << csv_number(r.bias_low) << ','
        << csv_number(r.bias_high) << ','
        << (r.error.empty() ? std::string("ok") : csv_quote("error: " + r.error)) << "\n";
  }
}

nlohmann::ordered_json to_json(const SweepRow& r) {
  nlohmann::ordered_json j;
  j["axis"] = r.axis ? std::string(to_string(*r.axis)) : "none";
  put_optional(j, "axis_value", r.axis_value);
  j["design"] = to_string(r.design.kind);
  put_optional(j, "allocation",
               r.design.randomized() ? std::optional<double>(r.design.allocation) : std::nullopt);
  j["lambda"] = r.lambda;
  j["n"] = r.n;
  j["reps"] = r.replications;
  j["source"] = r.monte_carlo ? "montecarlo" : "analytic";
  j["est"] = r.estimate;
  j["gte"] = r.gte;
  j["bias"] = r.bias;
  put_optional(j, "rel_bias", r.relative_bias);
  put_optional(j, "sd", r.sd);
  put_optional(j, "mse", r.mse);
  put_optional(j, "scaled_var", r.scaled_variance);
  put_optional(j, "bias_lo", r.bias_low);
  put_optional(j, "bias_hi", r.bias_high);
  j["status"] = r.error.empty() ? "ok" : "error: " + r.error;
  return j;
}

nlohmann::ordered_json to_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["replications"] = s.replications;
  j["n"] = s.n_listings;
  j["estimator_mean"] = s.estimator_mean;
  j["estimator_sd"] = s.estimator_sd;
  j["std_error"] = s.std_error;
  j["half_width"] = s.half_width;
  j["gte_reference"] = s.gte_reference;
  j["bias"] = s.bias;
  put_optional(j, "relative_bias", s.relative_bias);
  j["mse"] = s.mse;
  j["scaled_variance"] = s.scaled_variance;
  return j;
}

nlohmann::ordered_json to_json(const BiasReport& b) {
  nlohmann::ordered_json j;
  j["estimator_limit"] = b.estimator_limit;
  j["gte"] = b.gte_limit;
  j["bias"] = b.bias;
  put_optional(j, "relative_bias", b.relative_bias);
  return j;
}

nlohmann::ordered_json to_json(const ExactExpectations& e) {
  nlohmann::ordered_json j;
  j["total_weight"] = e.total_weight;
  j["bookings"] = e.bookings;
  j["bookings_treated_customers"] = e.bookings_treated_customers;
  j["bookings_control_customers"] = e.bookings_control_customers;
  j["bookings_treated_listings"] = e.bookings_treated_listings;
  j["bookings_control_listings"] = e.bookings_control_listings;
  j["estimator"] = e.estimator;
  j["estimator_variance"] = e.estimator_variance;
  return j;
}

}  // namespace mktlab
