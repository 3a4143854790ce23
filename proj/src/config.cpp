#include "mktlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace mktlab {

using nlohmann::json;

std::string_view to_string(OutputFormat format) {
  switch (format) {
    case OutputFormat::json: return "json";
    case OutputFormat::csv: return "csv";
    case OutputFormat::text: return "text";
  }
  return "?";
}

std::string_view to_string(GteReference ref) {
  return ref == GteReference::analytic ? "analytic" : "montecarlo";
}

namespace {

// Reads one JSON object and rejects keys nobody asked for.
class Block {
 public:
  Block(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return doc_.contains(key); }
  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (!v) throw ConfigError(field(key), "required field is missing");
    return *v;
  }

  double number(const std::string& key, const json& v) const {
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(field(key), "must be finite");
    return d;
  }

  std::uint64_t unsigned_integer(const std::string& key, const json& v) const {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw ConfigError(field(key), "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  std::string string(const std::string& key, const json& v) const {
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, const json& v) const {
    if (!v.is_array()) throw ConfigError(field(key), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(number(key, x));
    return out;
  }

  std::vector<std::string> strings(const std::string& key, const json& v) const {
    if (!v.is_array()) throw ConfigError(field(key), "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& x : v) out.push_back(string(key, x));
    return out;
  }

  Matrix matrix(const std::string& key, const json& v) const {
    if (!v.is_array() || v.empty() || !v.front().is_array())
      throw ConfigError(field(key), "expected a nonempty array of rows");
    const std::size_t cols = v.front().size();
    Matrix m(v.size(), cols);
    for (std::size_t r = 0; r < v.size(); ++r) {
      const auto row = numbers(key, v[r]);
      if (row.size() != cols) throw ConfigError(field(key), "rows must have equal length");
      for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c];
    }
    return m;
  }

  template <class Parse>
  auto parse(const std::string& key, const json& v, Parse parse_fn) const {
    try {
      return parse_fn(string(key, v));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(field(key), e.what());
    }
  }

  void finish() const {
    for (auto it = doc_.begin(); it != doc_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown field");
  }

 private:
  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

// Re-raises a validation failure ("sigma: ...") as a ConfigError under `prefix`.
[[noreturn]] void rethrow_as_config(const std::exception& e, const std::string& prefix) {
  const std::string msg = e.what();
  const auto colon = msg.find(": ");
  if (colon != std::string::npos && msg.find(' ') > colon)
    throw ConfigError(prefix + "." + msg.substr(0, colon), msg.substr(colon + 2));
  throw ConfigError(prefix, msg);
}

Arm parse_arm(std::string_view s) {
  if (s == "control") return Arm::control;
  if (s == "treatment") return Arm::treatment;
  throw std::invalid_argument("expected 'control' or 'treatment'");
}

std::string_view arm_name(Arm a) { return a == Arm::treatment ? "treatment" : "control"; }

OutputFormat parse_format(std::string_view s) {
  for (auto f : {OutputFormat::json, OutputFormat::csv, OutputFormat::text})
    if (s == to_string(f)) return f;
  throw std::invalid_argument("expected json, csv or text");
}

GteReference parse_gte(std::string_view s) {
  if (s == "analytic") return GteReference::analytic;
  if (s == "montecarlo") return GteReference::monte_carlo;
  throw std::invalid_argument("expected analytic or montecarlo");
}

DesignSpec parse_design(const json& doc, const std::string& path) {
  Block b(doc, path);
  DesignSpec d;
  d.kind = b.parse("kind", b.require("kind"), parse_design_kind);
  if (const json* a = b.find("allocation")) d.allocation = b.number("allocation", *a);
  b.finish();
  try {
    d.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(b.field("allocation"), e.what());
  }
  return d;
}

MarketSpec parse_market(const json& doc, bool& shorthand) {
  Block b(doc, "market");
  MarketSpec spec;
  spec.lambda = b.number("lambda", b.require("lambda"));
  const bool short_keys = b.has("phi") || b.has("phi_tilde");
  const bool full_keys = b.has("phi_control") || b.has("phi_treatment") || b.has("sigma") ||
                         b.has("tau") || b.has("customer_types") || b.has("listing_types");
  if (short_keys && full_keys)
    throw ConfigError("market",
                      "homogeneous shorthand (phi, phi_tilde) and full matrices are mutually "
                      "exclusive");
  shorthand = short_keys;
  if (short_keys) {
    const double phi = b.number("phi", b.require("phi"));
    const double phi_t = b.number("phi_tilde", b.require("phi_tilde"));
    spec = MarketSpec::homogeneous(phi, phi_t, spec.lambda);
  } else {
    spec.customer_types = b.strings("customer_types", b.require("customer_types"));
    spec.listing_types = b.strings("listing_types", b.require("listing_types"));
    spec.sigma = b.numbers("sigma", b.require("sigma"));
    spec.tau = b.numbers("tau", b.require("tau"));
    spec.phi_control = b.matrix("phi_control", b.require("phi_control"));
    spec.phi_treatment = b.matrix("phi_treatment", b.require("phi_treatment"));
  }
  b.finish();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    if (shorthand && std::string(e.what()).starts_with("phi_control"))
      throw ConfigError("market.phi", "must be finite and >= 0");
    if (shorthand && std::string(e.what()).starts_with("phi_treatment"))
      throw ConfigError("market.phi_tilde", "must be finite and >= 0");
    rethrow_as_config(e, "market");
  }
  return spec;
}

TinyMarket parse_oracle(const json& doc) {
  Block b(doc, "oracle");
  TinyMarket m;
  m.prob = b.matrix("prob", b.require("prob"));
  const auto arms = [&](const std::string& key, std::size_t count) {
    std::vector<Arm> out;
    if (const json* v = b.find(key)) {
      for (const auto& s : b.strings(key, *v)) {
        try {
          out.push_back(parse_arm(s));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(b.field(key), e.what());
        }
      }
    } else {
      out.assign(count, Arm::control);
    }
    return out;
  };
  m.customer_arm = arms("customer_arm", m.prob.rows());
  m.listing_arm = arms("listing_arm", m.prob.cols());
  if (const json* d = b.find("design")) m.design = b.parse("design", *d, parse_design_kind);
  b.finish();
  try {
    m.validate();
  } catch (const std::exception& e) {
    rethrow_as_config(e, "oracle");
  }
  return m;
}

}  // namespace

RunConfig parse_config(const json& doc) {
  Block root(doc, "");
  RunConfig cfg;
  if (const json* m = root.find("market")) cfg.market = parse_market(*m, cfg.homogeneous_shorthand);
  if (const json* d = root.find("design")) cfg.design = parse_design(*d, "design");

  if (const json* e = root.find("execution")) {
    Block b(*e, "execution");
    if (const json* v = b.find("n")) {
      const auto n = b.unsigned_integer("n", *v);
      if (n < 1) throw ConfigError("execution.n", "must be at least 1");
      cfg.execution.n = static_cast<std::int64_t>(n);
    }
    if (const json* v = b.find("replications"))
      cfg.execution.replications = b.unsigned_integer("replications", *v);
    if (const json* v = b.find("master_seed"))
      cfg.execution.master_seed = b.unsigned_integer("master_seed", *v);
    if (const json* v = b.find("mode")) cfg.execution.mode = b.parse("mode", *v, parse_sweep_mode);
    if (const json* v = b.find("gte")) cfg.execution.gte = b.parse("gte", *v, parse_gte);
    b.finish();
  }

  if (const json* o = root.find("output")) {
    Block b(*o, "output");
    if (const json* v = b.find("format")) cfg.output.format = b.parse("format", *v, parse_format);
    if (const json* v = b.find("path")) cfg.output.path = b.string("path", *v);
    b.finish();
  }

  if (const json* s = root.find("sweep")) {
    Block b(*s, "sweep");
    SweepBlock sweep;
    sweep.axis = b.parse("axis", b.require("axis"), parse_sweep_axis);
    sweep.values = b.numbers("values", b.require("values"));
    if (sweep.values.empty()) throw ConfigError("sweep.values", "must be nonempty");
    if (!std::is_sorted(sweep.values.begin(), sweep.values.end()))
      throw ConfigError("sweep.values", "must be sorted ascending");
    if (const json* d = b.find("designs")) {
      if (!d->is_array() || d->empty())
        throw ConfigError("sweep.designs", "expected a nonempty array of designs");
      for (std::size_t i = 0; i < d->size(); ++i)
        sweep.designs.push_back(parse_design((*d)[i], "sweep.designs[" + std::to_string(i) + "]"));
    }
    b.finish();
    cfg.sweep = std::move(sweep);
  }

  if (const json* r = root.find("recommend")) {
    Block b(*r, "recommend");
    cfg.objective = b.parse("objective", b.require("objective"), parse_objective);
    b.finish();
  }

  if (const json* c = root.find("calibrate")) {
    Block b(*c, "calibrate");
    cfg.calibrate_target = b.number("target", b.require("target"));
    b.finish();
  }

  if (const json* o = root.find("oracle")) cfg.oracle = parse_oracle(*o);
  root.finish();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

namespace {

nlohmann::ordered_json design_json(const DesignSpec& d) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(d.kind);
  j["allocation"] = d.allocation;
  return j;
}

nlohmann::ordered_json matrix_json(const Matrix& m) {
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

}  // namespace

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  if (cfg.market) {
    const MarketSpec& m = *cfg.market;
    nlohmann::ordered_json mj;
    mj["lambda"] = m.lambda;
    if (cfg.homogeneous_shorthand) {
      mj["phi"] = m.phi_control(0, 0);
      mj["phi_tilde"] = m.phi_treatment(0, 0);
    } else {
      mj["customer_types"] = m.customer_types;
      mj["listing_types"] = m.listing_types;
      mj["sigma"] = m.sigma;
      mj["tau"] = m.tau;
      mj["phi_control"] = matrix_json(m.phi_control);
      mj["phi_treatment"] = matrix_json(m.phi_treatment);
    }
    j["market"] = std::move(mj);
  }
  j["design"] = design_json(cfg.design);

  nlohmann::ordered_json ej;
  if (cfg.execution.n > 0) ej["n"] = cfg.execution.n;
  ej["replications"] = cfg.execution.replications;
  ej["master_seed"] = cfg.execution.master_seed;
  ej["mode"] = to_string(cfg.execution.mode);
  ej["gte"] = to_string(cfg.execution.gte);
  j["execution"] = std::move(ej);

  nlohmann::ordered_json oj;
  if (cfg.output.format) oj["format"] = to_string(*cfg.output.format);
  oj["path"] = cfg.output.path;
  j["output"] = std::move(oj);

  if (cfg.sweep) {
    nlohmann::ordered_json sj;
    sj["axis"] = to_string(cfg.sweep->axis);
    sj["values"] = cfg.sweep->values;
    if (!cfg.sweep->designs.empty()) {
      auto ds = nlohmann::ordered_json::array();
      for (const auto& d : cfg.sweep->designs) ds.push_back(design_json(d));
      sj["designs"] = std::move(ds);
    }
    j["sweep"] = std::move(sj);
  }
  if (cfg.objective) j["recommend"]["objective"] = to_string(*cfg.objective);
  if (cfg.calibrate_target) j["calibrate"]["target"] = *cfg.calibrate_target;
  if (cfg.oracle) {
    nlohmann::ordered_json tj;
    tj["prob"] = matrix_json(cfg.oracle->prob);
    auto arms = [](const std::vector<Arm>& v) {
      std::vector<std::string> out;
      for (Arm a : v) out.emplace_back(arm_name(a));
      return out;
    };
    tj["customer_arm"] = arms(cfg.oracle->customer_arm);
    tj["listing_arm"] = arms(cfg.oracle->listing_arm);
    tj["design"] = to_string(cfg.oracle->design);
    j["oracle"] = std::move(tj);
  }
  return j;
}

}  // namespace mktlab
