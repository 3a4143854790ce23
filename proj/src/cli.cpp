#include "mktlab/cli.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mktlab/config.hpp"
#include "mktlab/experiment.hpp"
#include "mktlab/meanfield.hpp"
#include "mktlab/oracle.hpp"
#include "mktlab/output.hpp"
#include "mktlab/sweeps.hpp"

namespace mktlab {

namespace {

struct Flags {
  std::string config;
  std::optional<double> lambda;
  std::optional<double> alloc;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> reps;
  std::optional<std::int64_t> n;
  std::optional<std::string> design;
  std::optional<double> phi;
  std::optional<double> phi_tilde;
  std::optional<double> target;
  std::optional<std::string> objective;
  std::optional<std::string> mode;
  std::optional<std::string> gte;
  std::optional<std::string> format;
  std::optional<std::string> out;
};

template <class T, class Parse>
T parse_flag(const std::string& field, const std::string& text, Parse parse) {
  try {
    return parse(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
}

RunConfig build_config(const Flags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);

  if (f.phi || f.phi_tilde) {
    if (cfg.market && !cfg.homogeneous_shorthand)
      throw ConfigError("market.phi", "cannot override a market given by full matrices");
    double phi = cfg.market ? cfg.market->phi_control(0, 0) : 0.0;
    double phi_t = cfg.market ? cfg.market->phi_treatment(0, 0) : 0.0;
    if (!cfg.market && !f.phi) throw ConfigError("market.phi", "required field is missing");
    if (!cfg.market && !f.phi_tilde)
      throw ConfigError("market.phi_tilde", "required field is missing");
    if (f.phi) phi = *f.phi;
    if (f.phi_tilde) phi_t = *f.phi_tilde;
    const double lambda = f.lambda ? *f.lambda : cfg.market ? cfg.market->lambda : 0.0;
    if (!f.lambda && !cfg.market) throw ConfigError("market.lambda", "required field is missing");
    cfg.market = MarketSpec::homogeneous(phi, phi_t, lambda);
    cfg.homogeneous_shorthand = true;
  } else if (f.lambda && cfg.market) {
    cfg.market->lambda = *f.lambda;
  }
  if (cfg.market) {
    try {
      cfg.market->validate();
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      if (msg.starts_with("lambda")) throw ConfigError("market.lambda", "must be positive and finite");
      if (msg.starts_with("phi_control")) throw ConfigError("market.phi", "must be finite and >= 0");
      if (msg.starts_with("phi_treatment"))
        throw ConfigError("market.phi_tilde", "must be finite and >= 0");
      throw ConfigError("market", msg);
    }
  }

  if (f.design) cfg.design.kind = parse_flag<DesignKind>("design.kind", *f.design, parse_design_kind);
  if (f.alloc) cfg.design.allocation = *f.alloc;
  try {
    cfg.design.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError("design.allocation", e.what());
  }

  if (f.seed) cfg.execution.master_seed = *f.seed;
  if (f.reps) cfg.execution.replications = *f.reps;
  if (f.n) {
    if (*f.n < 1) throw ConfigError("execution.n", "must be at least 1");
    cfg.execution.n = *f.n;
  }
  if (f.mode) cfg.execution.mode = parse_flag<SweepMode>("execution.mode", *f.mode, parse_sweep_mode);
  if (f.gte) {
    if (*f.gte == "analytic")
      cfg.execution.gte = GteReference::analytic;
    else if (*f.gte == "montecarlo")
      cfg.execution.gte = GteReference::monte_carlo;
    else
      throw ConfigError("execution.gte", "expected analytic or montecarlo");
  }
  if (f.format) {
    if (*f.format == "json")
      cfg.output.format = OutputFormat::json;
    else if (*f.format == "csv")
      cfg.output.format = OutputFormat::csv;
    else if (*f.format == "text")
      cfg.output.format = OutputFormat::text;
    else
      throw ConfigError("output.format", "expected json, csv or text");
  }
  if (f.out) cfg.output.path = *f.out;
  if (f.objective) cfg.objective = parse_flag<Objective>("recommend.objective", *f.objective, parse_objective);
  if (f.target) cfg.calibrate_target = *f.target;
  return cfg;
}

const MarketSpec& require_market(const RunConfig& cfg) {
  if (!cfg.market) throw ConfigError("market", "required block is missing");
  return *cfg.market;
}

OutputFormat pick_format(const RunConfig& cfg, OutputFormat fallback, bool csv_ok, bool text_ok) {
  const OutputFormat f = cfg.output.format.value_or(fallback);
  if ((f == OutputFormat::csv && !csv_ok) || (f == OutputFormat::text && !text_ok))
    throw ConfigError("output.format", std::string(to_string(f)) + " is not available here");
  return f;
}

std::string rows_output(const std::vector<SweepRow>& rows, OutputFormat format) {
  if (format == OutputFormat::csv) {
    std::ostringstream s;
    write_csv(s, rows);
    return s.str();
  }
  nlohmann::ordered_json doc;
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) doc["rows"].push_back(to_json(r));
  return dump_json(doc);
}

nlohmann::ordered_json design_fields(const DesignSpec& d) {
  nlohmann::ordered_json j;
  j["design"] = to_string(d.kind);
  if (d.randomized())
    j["allocation"] = d.allocation;
  else
    j["allocation"] = nullptr;
  return j;
}

std::string cmd_analytic(const RunConfig& cfg) {
  const MarketSpec& spec = require_market(cfg);
  const auto format = pick_format(cfg, OutputFormat::json, true, false);
  if (cfg.design.randomized() && format == OutputFormat::csv)
    return rows_output({evaluate_analytic(spec, cfg.design, cfg.execution.n)}, format);

  auto doc = design_fields(cfg.design);
  doc["lambda"] = spec.lambda;
  if (!cfg.design.randomized()) {
    if (format == OutputFormat::csv)
      throw ConfigError("output.format", "csv needs a cr or lr design");
    const Arm arm = cfg.design.kind == DesignKind::global_treatment ? Arm::treatment : Arm::control;
    doc["booking_rate"] = limit_booking_rate(spec, arm);
    doc["gte"] = gte_limit(spec);
    return dump_json(doc);
  }
  doc.update(to_json(asymptotic_bias(spec, cfg.design)));
  doc["bias_differential_bound"] = bias_differential_bound(spec);
  if (spec.is_homogeneous()) {
    const double phi = spec.phi_control(0, 0);
    const double phi_t = spec.phi_treatment(0, 0);
    const double a = cfg.design.allocation;
    nlohmann::ordered_json var;
    if (cfg.design.kind == DesignKind::customer_randomized) {
      const auto v = cr_variance_limit(phi, phi_t, spec.lambda, a);
      var = {{"total", v.total}, {"vt", v.vt},     {"vc", v.vc},
             {"cvtt", v.cvtt},   {"cvcc", v.cvcc}, {"cvtc", v.cvtc}};
    } else {
      const auto v = lr_variance_limit(phi, phi_t, spec.lambda, a);
      var = {{"total", v.total}, {"vt", v.vt}, {"vc", v.vc}, {"cv", v.cv}};
    }
    doc["scaled_variance"] = var;
    doc["variance_ratio"] = variance_approx_ratio(phi, phi_t, spec.lambda, cfg.design.kind);
    if (phi != phi_t && phi > 0.0 && phi_t > 0.0) {
      const auto star = find_lambda_star(phi, phi_t);
      if (star)
        doc["lambda_star"] = *star;
      else
        doc["lambda_star"] = nullptr;
    }
    if (cfg.execution.n > 0) {
      const double v = var["total"].get<double>() / static_cast<double>(cfg.execution.n);
      doc["sd"] = std::sqrt(v);
      doc["mse"] = doc["bias"].get<double>() * doc["bias"].get<double>() + v;
    }
  }
  return dump_json(doc);
}

std::string cmd_simulate(const RunConfig& cfg) {
  const MarketSpec& spec = require_market(cfg);
  const auto format = pick_format(cfg, OutputFormat::json, true, false);
  if (cfg.execution.n < 1) throw ConfigError("execution.n", "required for simulate");
  if (cfg.execution.replications < 2)
    throw ConfigError("execution.replications", "simulate needs at least 2");
  const auto& e = cfg.execution;
  if (format == OutputFormat::csv)
    return rows_output({evaluate_montecarlo(spec, cfg.design, e.n, e.replications, e.master_seed,
                                            e.gte)},
                       format);
  const auto summary =
      run_replications(spec, cfg.design, e.n, e.replications, e.master_seed, {e.gte, 0});
  auto doc = design_fields(cfg.design);
  doc["lambda"] = spec.lambda;
  doc["master_seed"] = e.master_seed;
  doc["gte_source"] = to_string(e.gte);
  doc.update(to_json(summary));
  return dump_json(doc);
}

std::string cmd_sweep(const RunConfig& cfg) {
  if (!cfg.sweep) throw ConfigError("sweep", "required block is missing");
  const auto format = pick_format(cfg, OutputFormat::csv, true, false);
  SweepPlan plan;
  plan.base = require_market(cfg);
  plan.axis = cfg.sweep->axis;
  plan.values = cfg.sweep->values;
  plan.designs = cfg.sweep->designs.empty() ? std::vector{cfg.design} : cfg.sweep->designs;
  plan.mode = cfg.execution.mode;
  plan.n = cfg.execution.n;
  plan.replications = cfg.execution.replications;
  plan.master_seed = cfg.execution.master_seed;
  plan.gte = cfg.execution.gte;
  try {
    plan.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(": ");
    const std::string key = msg.substr(0, colon);
    std::string block = "market.";
    if (key == "n" || key == "replications") block = "execution.";
    if (key == "values" || key == "designs") block = "sweep.";
    throw ConfigError(block + key, msg.substr(colon + 2));
  }
  return rows_output(run_sweep(plan), format);
}

std::string cmd_oracle(const RunConfig& cfg) {
  if (!cfg.oracle) throw ConfigError("oracle", "required block is missing");
  pick_format(cfg, OutputFormat::json, false, false);
  const TinyMarket& tiny = *cfg.oracle;
  nlohmann::ordered_json doc;
  doc["design"] = to_string(tiny.design);
  doc["exact"] = to_json(exact_expectations(tiny));
  if (cfg.execution.replications >= 2) {
    const DesignSpec design{tiny.design, 0.5};
    const auto estimates = replicate_estimates(to_finite_market(tiny), design, 0,
                                               cfg.execution.replications,
                                               cfg.execution.master_seed);
    const auto s = summarize(estimates, doc["exact"]["estimator"].get<double>(), 0);
    nlohmann::ordered_json mc;
    mc["replications"] = s.replications;
    mc["master_seed"] = cfg.execution.master_seed;
    mc["estimator_mean"] = s.estimator_mean;
    mc["estimator_sd"] = s.estimator_sd;
    mc["std_error"] = s.std_error;
    mc["z"] = s.std_error > 0.0 ? s.bias / s.std_error : 0.0;
    doc["montecarlo"] = mc;
  }
  return dump_json(doc);
}

std::string cmd_calibrate(const RunConfig& cfg, std::optional<double> lambda_flag) {
  if (!cfg.calibrate_target) throw ConfigError("calibrate.target", "required field is missing");
  const auto format = pick_format(cfg, OutputFormat::text, false, true);
  const double lambda = lambda_flag ? *lambda_flag : cfg.market ? cfg.market->lambda : 1.0;
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ConfigError("market.lambda", "must be positive and finite");
  const double target = *cfg.calibrate_target;
  if (!(target > 0.0 && target < 1.0))
    throw ConfigError("calibrate.target", "must lie in (0,1)");
  const double phi = calibrate_phi(target, lambda);
  if (format == OutputFormat::text) return "phi=" + format_number(phi) + "\n";
  nlohmann::ordered_json doc;
  doc["target"] = target;
  doc["lambda"] = lambda;
  doc["phi"] = phi;
  return dump_json(doc);
}

std::string cmd_recommend(const RunConfig& cfg) {
  const MarketSpec& spec = require_market(cfg);
  pick_format(cfg, OutputFormat::json, false, false);
  const Objective objective = cfg.objective.value_or(Objective::bias);
  std::optional<std::int64_t> n;
  if (cfg.execution.n > 0) n = cfg.execution.n;
  if (objective == Objective::mse && !n)
    throw ConfigError("execution.n", "the mse objective requires a market size");
  const auto r = recommend_design(spec, objective, n);
  auto doc = design_fields(r.design);
  doc["objective"] = to_string(objective);
  doc["objective_value"] = r.objective_value;
  doc["bias"] = r.bias;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v)
      doc[key] = *v;
    else
      doc[key] = nullptr;
  };
  put("scaled_variance", r.scaled_variance);
  put("sd", r.sd);
  put("mse", r.mse);
  return dump_json(doc);
}

void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.output.path == "-" || cfg.output.path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(cfg.output.path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write '" + cfg.output.path + "'");
  file << text;
  if (!file) throw std::runtime_error("write failed for '" + cfg.output.path + "'");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"mktlab: two-sided marketplace experiment lab"};
  app.name("mktlab");
  app.require_subcommand(1, 1);
  app.fallthrough();

  Flags f;
  app.add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--lambda", f.lambda, "relative demand (customers per listing)");
  app.add_option("--alloc", f.alloc, "treated fraction for cr/lr designs");
  app.add_option("--seed", f.seed, "master seed");
  app.add_option("--reps", f.reps, "Monte Carlo replications");
  app.add_option("--n", f.n, "number of listings");
  app.add_option("--design", f.design, "gc, gt, cr or lr");
  app.add_option("--phi", f.phi, "control consideration rate (homogeneous market)");
  app.add_option("--phi-tilde", f.phi_tilde, "treatment consideration rate (homogeneous market)");
  app.add_option("--target", f.target, "target booking rate for calibrate");
  app.add_option("--objective", f.objective, "bias, variance or mse for recommend");
  app.add_option("--mode", f.mode, "analytic, montecarlo or both for sweep");
  app.add_option("--gte", f.gte, "GTE reference: analytic or montecarlo");
  app.add_option("--format", f.format, "json, csv or text");
  app.add_option("--out", f.out, "output path, '-' for standard output");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"analytic", "large-market limits of estimator, GTE, bias and variance"},
      {"simulate", "Monte Carlo replications of a finite market"},
      {"sweep", "evaluate designs along one axis"},
      {"oracle", "exact expectations of a tiny market by enumeration"},
      {"calibrate", "consideration rate matching a target booking rate"},
      {"recommend", "pick the design and allocation for an objective"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  std::vector<const char*> args(argv, argv + argc);
  try {
    app.parse(static_cast<int>(args.size()), args.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const RunConfig cfg = build_config(f);
    std::string text;
    if (command == "analytic") text = cmd_analytic(cfg);
    else if (command == "simulate") text = cmd_simulate(cfg);
    else if (command == "sweep") text = cmd_sweep(cfg);
    else if (command == "oracle") text = cmd_oracle(cfg);
    else if (command == "calibrate") text = cmd_calibrate(cfg, f.lambda);
    else text = cmd_recommend(cfg);
    emit(cfg, text, out);
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace mktlab
