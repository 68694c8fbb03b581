#include "weakiv/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI/CLI.hpp>

#include "weakiv/asymptotics.hpp"
#include "weakiv/conditional.hpp"
#include "weakiv/diagnostics.hpp"
#include "weakiv/distance.hpp"
#include "weakiv/errors.hpp"
#include "weakiv/power.hpp"
#include "weakiv/special.hpp"

namespace weakiv::cli {
namespace {

using nlohmann::json;

/// Failures that originate in the CLI layer itself (files, flags).
struct UsageError : std::runtime_error {
  UsageError(std::string name, const std::string& message) : std::runtime_error(message), name(std::move(name)) {}
  std::string name;
};

[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorKind::InvalidInput, message); }

double number_field(const json& doc, const char* key) {
  const json& v = doc.at(key);
  if (!v.is_number()) invalid(std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

Vector vector_field(const json& doc, const char* key, int k) {
  const json& v = doc.at(key);
  if (!v.is_array()) invalid(std::string("\"") + key + "\" must be an array");
  if (static_cast<int>(v.size()) != k) {
    throw Error(ErrorKind::DimensionMismatch, std::string("\"") + key + "\" must have k entries");
  }
  Vector out(k);
  for (int i = 0; i < k; ++i) {
    if (!v[i].is_number()) invalid(std::string("\"") + key + "\" entries must be numbers");
    out(i) = v[i].get<double>();
  }
  if (!out.allFinite()) invalid(std::string("\"") + key + "\" entries must be finite");
  return out;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

/// JSON has no infinities; non-finite values become null.
json number_json(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("IoError", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    invalid(std::string("malformed JSON: ") + e.what());
  }
}

void emit(const std::string& text, const std::string& output_path, std::ostream& out) {
  if (output_path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(output_path, std::ios::binary);
  if (!file) throw UsageError("IoError", "cannot write " + output_path);
  file << text;
}

void require_cli_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 0.5)) invalid("alpha must lie in (0, 0.5]");
}

std::vector<TestKind> parse_tests(const std::vector<std::string>& names, bool has_weight) {
  std::vector<TestKind> out;
  if (names.empty()) {
    for (TestKind kind : kAllTests) {
      if (kind != TestKind::CLC || has_weight) out.push_back(kind);
    }
    return out;
  }
  for (const std::string& name : names) out.push_back(parse_test_kind(name));
  return out;
}

WeightFunction constant_weight(std::optional<double> w) {
  if (!w) return {};
  if (!(*w >= 0.0 && *w <= 1.0)) throw Error(ErrorKind::InvalidWeight, "CLC weight must lie in [0, 1]");
  const double value = *w;
  return [value](const Vector&) { return value; };
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

/// Whitespace-aligned table with a header row.
std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size() + 2;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size() + 2);
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    std::string text;
    for (std::size_t c = 0; c < cells.size(); ++c) text += c + 1 == cells.size() ? cells[c] : pad(cells[c], width[c]);
    os << text << '\n';
  };
  line(header);
  for (const auto& row : rows) line(row);
  return os.str();
}

std::string opt7(const std::optional<double>& x) { return x ? format7(*x) : "not applicable"; }

// Subcommand state. CLI11 binds flags to these fields.

struct Common {
  std::string input;
  std::string output;
  double alpha = 0.05;
  bool alpha_set = false;
  std::uint64_t seed = 0;
  std::optional<int> threads;
  bool json_out = false;
};

struct TestArgs {
  std::vector<double> vec_r;
  double delta = 0.0;
  std::vector<std::string> tests;
  int n_cond = kDefaultCondDraws;
  std::optional<double> clc_weight;
};

struct PowerArgs {
  std::string design;
  int k = 0;
  double lambda = 0.0;
  double offdiag = kPresetOffdiagScale;
  double s22 = kPresetSigma22Scale;
  double beta0 = 0.0;
  std::vector<double> deltas;
  std::vector<std::string> tests;
  int n_outer = kDefaultOuterReps;
  int n_cond = kDefaultCondDraws;
  std::optional<double> clc_weight;
  std::string format = "csv";
};

struct TvArgs {
  std::vector<double> d;
  std::optional<int> k;
};

struct DriftArgs {
  std::vector<double> deltas{0.5, 1.0, 2.0, 5.0, 10.0, 100.0, 1000.0};
};

struct DesignArgs {
  int k = 10;
  double lambda = 100.0;
  double offdiag = kPresetOffdiagScale;
  double s22 = kPresetSigma22Scale;
  double beta0 = 0.0;
};

ModelInput load_model(const Common& c) {
  if (c.input.empty()) invalid("--input is required");
  return parse_model(read_json_file(c.input));
}

double effective_alpha(const Common& c, const ModelInput* model) {
  double alpha = c.alpha;
  if (!c.alpha_set && model && model->alpha) alpha = *model->alpha;
  require_cli_alpha(alpha);
  return alpha;
}

int cmd_test(const Common& c, const TestArgs& a, std::ostream& out) {
  const ModelInput in = load_model(c);
  const double alpha = effective_alpha(c, &in);
  const Model model = make_model(in.config);
  Vector vec_r;
  if (!a.vec_r.empty()) {
    if (static_cast<int>(a.vec_r.size()) != 2 * in.config.k) {
      throw Error(ErrorKind::DimensionMismatch, "--vec-r must have 2k entries");
    }
    vec_r = Eigen::Map<const Vector>(a.vec_r.data(), static_cast<Eigen::Index>(a.vec_r.size()));
  } else {
    if (!in.mu) invalid("simulating a draw needs \"mu\" in the input (or pass --vec-r)");
    const DesignPoint point = make_design_point(*in.mu, a.delta, model.blocks);
    vec_r = sample_vec_r(point, in.config, c.seed, 1).front();
  }
  require_draws(alpha, a.n_cond);
  const WeightFunction weight = constant_weight(a.clc_weight);
  const std::vector<TestKind> tests = parse_tests(a.tests, static_cast<bool>(weight));
  const QProfile profile(in.config);
  McOptions opts;
  opts.n_draws = a.n_cond;
  opts.seed = c.seed;
  opts.clc_weight = weight;

  std::vector<TestOutcome> outcomes;
  for (TestKind kind : tests) outcomes.push_back(run_test(kind, vec_r, model, profile, alpha, opts));

  std::string text;
  if (c.json_out) {
    json doc;
    doc["schema"] = kSchemaVersion;
    doc["model"] = model_to_json(in.config, in.mu, in.mu_hat);
    doc["vec_r"] = vector_json(vec_r);
    doc["alpha"] = alpha;
    doc["seed"] = c.seed;
    json rows = json::array();
    for (const TestOutcome& o : outcomes) {
      rows.push_back({{"test", std::string(to_string(o.test))},
                      {"statistic", number_json(o.statistic)},
                      {"critical_value", number_json(o.critical_value)},
                      {"reject", o.reject},
                      {"degenerate", o.degenerate},
                      {"n_cond_draws", o.n_cond_draws}});
    }
    doc["tests"] = rows;
    text = doc.dump(2) + "\n";
  } else {
    std::vector<std::vector<std::string>> rows;
    for (const TestOutcome& o : outcomes) {
      rows.push_back({std::string(to_string(o.test)), format7(o.statistic), format7(o.critical_value),
                      o.reject ? "yes" : "no"});
    }
    text = render_table({"test", "statistic", "critical_value", "reject"}, rows);
  }
  emit(text, c.output, out);
  return kExitOk;
}

json power_json(const PowerRequest& req, const PowerTable& table) {
  json doc;
  doc["schema"] = kSchemaVersion;
  doc["model"] = model_to_json(req.config, req.mu);
  doc["alpha"] = req.alpha;
  json rows = json::array();
  for (const PowerRow& r : table.rows) {
    rows.push_back({{"test", std::string(to_string(r.test))},
                    {"delta", r.delta},
                    {"d", r.d},
                    {"power", number_json(r.power)},
                    {"mc_se", number_json(r.mc_se)},
                    {"n_outer", r.n_outer},
                    {"seed", r.seed},
                    {"n_degenerate", r.n_degenerate}});
  }
  doc["rows"] = rows;
  return doc;
}

int cmd_power(const Common& c, const PowerArgs& a, std::ostream& out) {
  PowerRequest req;
  std::optional<ModelInput> in;
  if (!a.design.empty()) {
    if (a.design != "id") invalid("unknown design \"" + a.design + "\" (expected id)");
    if (!c.input.empty()) invalid("--design and --input are exclusive");
    if (a.k < 2) invalid("--design id needs --k >= 2");
    if (!(a.lambda > 0.0)) invalid("--design id needs --lambda > 0");
    const IdDesign d = make_id_design(a.k, a.lambda, a.offdiag, a.s22, a.beta0);
    req.config = d.config;
    req.mu = d.mu;
  } else {
    in = load_model(c);
    if (!in->mu) invalid("power needs \"mu\" in the input");
    req.config = in->config;
    req.mu = *in->mu;
  }
  req.alpha = effective_alpha(c, in ? &*in : nullptr);
  if (!a.deltas.empty()) {
    req.delta_grid = a.deltas;
  } else if (!a.design.empty()) {
    for (int i = 0; i <= 20; ++i) req.delta_grid.push_back(0.1 * i);
  } else {
    invalid("--deltas is required with --input");
  }
  req.clc_weight = constant_weight(a.clc_weight);
  req.tests = parse_tests(a.tests, static_cast<bool>(req.clc_weight));
  req.n_outer = a.n_outer;
  req.n_cond = a.n_cond;
  req.seed = c.seed;
  req.threads = resolve_cli_threads(c.threads, std::getenv("WEAKIV_THREADS"));
  if (a.format != "csv" && a.format != "json") invalid("--format must be csv or json");

  const PowerTable table = power_curve(req);
  const bool as_json = c.json_out || a.format == "json";
  emit(as_json ? power_json(req, table).dump(2) + "\n" : to_csv(table), c.output, out);
  return kExitOk;
}

int cmd_tvbound(const Common& c, const TvArgs& a, std::ostream& out) {
  if (a.d.empty()) invalid("--d is required");
  if (a.k) require_cli_alpha(c.alpha);
  std::string text;
  if (c.json_out) {
    json rows = json::array();
    for (double d : a.d) {
      json row = {{"d", d}, {"tv_bound", hull_tv_upper_bound(d)}};
      if (a.k) row["clr_power_lower_bound"] = clr_power_lower_bound(d, *a.k, c.alpha);
      rows.push_back(row);
    }
    text = json({{"schema", kSchemaVersion}, {"rows", rows}}).dump(2) + "\n";
  } else if (a.k) {
    std::vector<std::vector<std::string>> rows;
    for (double d : a.d) {
      rows.push_back({format7(d), format7(hull_tv_upper_bound(d)), format7(clr_power_lower_bound(d, *a.k, c.alpha))});
    }
    text = render_table({"d", "tv_bound", "clr_power_lower_bound"}, rows);
  } else {
    for (double d : a.d) text += format7(hull_tv_upper_bound(d)) + "\n";
  }
  emit(text, c.output, out);
  return kExitOk;
}

int cmd_drift(const Common& c, const DriftArgs& a, std::ostream& out) {
  const ModelInput in = load_model(c);
  if (!in.mu) invalid("drift needs \"mu\" in the input");
  const RotatedBlocks blocks = build_blocks(in.config);
  const Vector& mu = *in.mu;
  // The variance is invariant to the scale of pi; take pi = mu with D = I.
  AsymptoticInputs inputs;
  inputs.pi = mu;
  inputs.d_mat = Matrix::Identity(in.config.k, in.config.k);
  inputs.mu = mu;

  const IdGeometry geom = build_id_geometry(blocks);
  const double a_norm = geom.a_mat.norm();
  const bool id_holds = std::abs(mu.dot(geom.a_mat * mu)) <= 1e-8 * mu.squaredNorm() * std::max(a_norm, 1e-300);
  std::optional<double> limit;
  if (id_holds) limit = lm_id_limit(mu, blocks);

  std::vector<std::vector<std::string>> rows;
  json jrows = json::array();
  for (double delta : a.deltas) {
    const double drift = lm_fa_drift(delta, mu, blocks);
    const double variance = lm_fa_variance(delta, inputs, blocks);
    rows.push_back({format7(delta), format7(drift), format7(variance), opt7(limit)});
    jrows.push_back({{"delta", delta}, {"drift", drift}, {"variance", variance}});
  }
  std::string text;
  if (c.json_out) {
    json doc;
    doc["schema"] = kSchemaVersion;
    doc["model"] = model_to_json(in.config, in.mu, in.mu_hat);
    doc["id_holds"] = id_holds;
    doc["drift_limit"] = limit ? json(*limit) : json(nullptr);
    doc["rows"] = jrows;
    text = doc.dump(2) + "\n";
  } else {
    text = render_table({"delta", "drift", "variance", "drift_limit"}, rows);
  }
  emit(text, c.output, out);
  return kExitOk;
}

int cmd_diagnose(const Common& c, std::ostream& out) {
  const ModelInput in = load_model(c);
  if (!in.mu_hat) invalid("diagnose needs \"mu_hat\" in the input");
  const double alpha = effective_alpha(c, &in);
  const Model model = make_model(in.config);
  const DiagnosticReport r = diagnose(*in.mu_hat, model, alpha);

  std::string text;
  if (c.json_out) {
    json doc;
    doc["schema"] = kSchemaVersion;
    doc["model"] = model_to_json(in.config, in.mu, in.mu_hat);
    doc["alpha"] = alpha;
    doc["feasible"] = r.feasible;
    doc["certificate_mu"] = r.certificate_mu ? vector_json(*r.certificate_mu) : json(nullptr);
    doc["kappa_hat"] = r.kappa_hat ? number_json(*r.kappa_hat) : json(nullptr);
    doc["mu_tilde"] = r.mu_tilde ? vector_json(*r.mu_tilde) : json(nullptr);
    doc["confidence_bound"] = r.confidence_bound ? json(*r.confidence_bound) : json(nullptr);
    doc["eta_min"] = r.eta_min ? json(*r.eta_min) : json(nullptr);
    doc["cutoff"] = r.cutoff;
    doc["intersects"] = r.intersects;
    doc["f_stat"] = r.f_stat;
    doc["ar_noncentrality"] = r.ar_noncentrality ? json(*r.ar_noncentrality) : json(nullptr);
    doc["eigvals"] = vector_json(r.eigvals);
    text = doc.dump(2) + "\n";
  } else {
    const bool applicable = r.feasible;
    auto shown = [&](const std::optional<double>& x) { return applicable ? opt7(x) : std::string("not applicable"); };
    text = render_table({"feasible", "ar_noncentrality", "confidence_bound", "f_stat", "eta_min", "cutoff"},
                        {{r.feasible ? "yes" : "no", shown(r.ar_noncentrality), shown(r.confidence_bound),
                          format7(r.f_stat), shown(r.eta_min), format7(r.cutoff)}});
  }
  emit(text, c.output, out);
  return kExitOk;
}

int cmd_design(const Common& c, const DesignArgs& a, std::ostream& out) {
  const IdDesign d = make_id_design(a.k, a.lambda, a.offdiag, a.s22, a.beta0);
  emit(model_to_json(d.config, d.mu).dump(2) + "\n", c.output, out);
  return kExitOk;
}

void report_error(std::ostream& err, std::string_view name, const std::string& message) {
  err << json({{"error", std::string(name)}, {"message", message}}).dump() << '\n';
}

}  // namespace

ModelInput parse_model(const json& doc) {
  if (!doc.is_object()) invalid("model input must be a JSON object");
  static const std::vector<std::string> known = {"schema", "k", "beta0", "sigma", "mu", "mu_hat", "alpha"};
  for (const auto& item : doc.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) invalid("unknown key \"" + item.key() + "\"");
  }
  for (const char* key : {"schema", "k", "beta0", "sigma"}) {
    if (!doc.contains(key)) invalid(std::string("missing key \"") + key + "\"");
  }
  if (!doc["schema"].is_number_integer() || doc["schema"].get<long long>() != kSchemaVersion) {
    invalid("unsupported schema version (expected 1)");
  }
  if (!doc["k"].is_number_integer() || doc["k"].get<long long>() < 1 || doc["k"].get<long long>() > 10000) {
    invalid("\"k\" must be a positive integer");
  }
  ModelInput in;
  in.config.k = doc["k"].get<int>();
  in.config.beta0 = number_field(doc, "beta0");
  const int n = 2 * in.config.k;
  const json& s = doc["sigma"];
  if (!s.is_array() || static_cast<int>(s.size()) != n) {
    throw Error(ErrorKind::DimensionMismatch, "\"sigma\" must be a 2k x 2k array of rows");
  }
  in.config.sigma.resize(n, n);
  for (int i = 0; i < n; ++i) {
    if (!s[i].is_array() || static_cast<int>(s[i].size()) != n) {
      throw Error(ErrorKind::DimensionMismatch, "\"sigma\" must be a 2k x 2k array of rows");
    }
    for (int j = 0; j < n; ++j) {
      if (!s[i][j].is_number()) invalid("\"sigma\" entries must be numbers");
      in.config.sigma(i, j) = s[i][j].get<double>();
    }
  }
  validate(in.config);
  if (doc.contains("mu")) in.mu = vector_field(doc, "mu", in.config.k);
  if (doc.contains("mu_hat")) in.mu_hat = vector_field(doc, "mu_hat", in.config.k);
  if (doc.contains("alpha")) in.alpha = number_field(doc, "alpha");
  return in;
}

json model_to_json(const ModelConfig& config, const std::optional<Vector>& mu, const std::optional<Vector>& mu_hat) {
  json doc;
  doc["schema"] = kSchemaVersion;
  doc["k"] = config.k;
  doc["beta0"] = config.beta0;
  json rows = json::array();
  for (Eigen::Index i = 0; i < config.sigma.rows(); ++i) rows.push_back(vector_json(config.sigma.row(i).transpose()));
  doc["sigma"] = rows;
  if (mu) doc["mu"] = vector_json(*mu);
  if (mu_hat) doc["mu_hat"] = vector_json(*mu_hat);
  return doc;
}

unsigned resolve_cli_threads(std::optional<int> flag, const char* env_value) {
  if (flag) {
    if (*flag < 1) invalid("--threads must be positive");
    return static_cast<unsigned>(*flag);
  }
  if (env_value == nullptr || *env_value == '\0') return 0;
  const std::string_view text(env_value);
  int value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || value < 1) {
    invalid("WEAKIV_THREADS must be a positive integer");
  }
  return static_cast<unsigned>(value);
}

std::string format7(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(7) << x;
  return os.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weak-instrument tests, power curves and identification diagnostics", "weakiv"};
  app.require_subcommand(1);

  Common common;
  TestArgs test_args;
  PowerArgs power_args;
  TvArgs tv_args;
  DriftArgs drift_args;
  DesignArgs design_args;

  auto add_input = [&](CLI::App* sub) {
    sub->add_option("--input,-i", common.input, "Model JSON (schema 1)");
  };
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--output,-o", common.output, "Write results to this file instead of stdout");
    sub->add_flag("--json", common.json_out, "Emit JSON at full precision");
  };
  auto add_alpha = [&](CLI::App* sub) {
    sub->add_option("--alpha", common.alpha, "Significance level in (0, 0.5]")->each([&](const std::string&) {
      common.alpha_set = true;
    });
  };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", common.seed, "Seed for every random stream"); };
  auto add_threads = [&](CLI::App* sub) {
    sub->add_option("--threads", common.threads, "Worker threads (default: WEAKIV_THREADS or all cores)");
  };

  CLI::App* test = app.add_subcommand("test", "Evaluate the tests on one reduced-form draw");
  add_input(test);
  add_output(test);
  add_alpha(test);
  add_seed(test);
  add_threads(test);
  test->add_option("--vec-r", test_args.vec_r, "Observed vec(R), 2k comma-separated values")->delimiter(',');
  test->add_option("--delta", test_args.delta, "Separation used when simulating the draw from mu");
  test->add_option("--tests", test_args.tests, "Comma-separated test names")->delimiter(',');
  test->add_option("--n-cond", test_args.n_cond, "Conditional critical-value draws");
  test->add_option("--clc-weight", test_args.clc_weight, "Constant CLC weight in [0, 1]");

  CLI::App* power = app.add_subcommand("power", "Monte-Carlo power curves (CSV)");
  add_input(power);
  add_output(power);
  add_alpha(power);
  add_seed(power);
  add_threads(power);
  power->add_option("--design", power_args.design, "Built-in design: id");
  power->add_option("--k", power_args.k, "Instruments for --design id");
  power->add_option("--lambda", power_args.lambda, "mu' Sigma11^{-1} mu for --design id");
  power->add_option("--offdiag", power_args.offdiag, "Anti-diagonal Sigma12 scale for --design id");
  power->add_option("--s22", power_args.s22, "Sigma22 scale for --design id");
  power->add_option("--beta0", power_args.beta0, "Null value for --design id");
  power->add_option("--deltas", power_args.deltas, "Comma-separated Delta grid")->delimiter(',');
  power->add_option("--tests", power_args.tests, "Comma-separated test names")->delimiter(',');
  power->add_option("--n-outer", power_args.n_outer, "Outer replications");
  power->add_option("--n-cond", power_args.n_cond, "Conditional critical-value draws");
  power->add_option("--clc-weight", power_args.clc_weight, "Constant CLC weight in [0, 1]");
  power->add_option("--format", power_args.format, "csv or json");

  CLI::App* tv = app.add_subcommand("tvbound", "Hull total-variation bound F_chi2(1)(d / 4)");
  add_output(tv);
  add_alpha(tv);
  tv->add_option("--d", tv_args.d, "Noncentrality values")->delimiter(',');
  tv->add_option("--k", tv_args.k, "Also print the CLR power lower bound for k instruments");

  CLI::App* drift = app.add_subcommand("drift", "LM drift and variance under fixed alternatives");
  add_input(drift);
  add_output(drift);
  drift->add_option("--deltas", drift_args.deltas, "Comma-separated Delta grid")->delimiter(',');

  CLI::App* diag = app.add_subcommand("diagnose", "Identification-failure diagnostics for mu_hat");
  add_input(diag);
  add_output(diag);
  add_alpha(diag);

  CLI::App* design = app.add_subcommand("design", "Emit the identification-failure design as model JSON");
  add_output(design);
  design->add_option("--k", design_args.k, "Instruments (>= 2)");
  design->add_option("--lambda", design_args.lambda, "mu' Sigma11^{-1} mu");
  design->add_option("--offdiag", design_args.offdiag, "Anti-diagonal Sigma12 scale");
  design->add_option("--s22", design_args.s22, "Sigma22 scale");
  design->add_option("--beta0", design_args.beta0, "Null value");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, "UsageError", e.what());
    return kExitValidation;
  }

  try {
    if (*test) return cmd_test(common, test_args, out);
    if (*power) return cmd_power(common, power_args, out);
    if (*tv) return cmd_tvbound(common, tv_args, out);
    if (*drift) return cmd_drift(common, drift_args, out);
    if (*diag) return cmd_diagnose(common, out);
    if (*design) return cmd_design(common, design_args, out);
  } catch (const Error& e) {
    report_error(err, to_string(e.kind()), e.what());
    return is_validation_error(e.kind()) ? kExitValidation : kExitNumerical;
  } catch (const UsageError& e) {
    report_error(err, e.name, e.what());
    return kExitValidation;
  } catch (const json::exception& e) {
    report_error(err, "InvalidInput", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    report_error(err, "InternalError", e.what());
    return kExitNumerical;
  }
  return kExitValidation;
}

}  // namespace weakiv::cli
