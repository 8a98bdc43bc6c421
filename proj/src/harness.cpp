#include "rxsolve/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rxsolve/rng.hpp"

namespace rx {

namespace {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// batch running
// ---------------------------------------------------------------------------

constexpr std::uint64_t kNoiseStreamSalt = 0x6A09E667F3BCC909ULL;

}  // namespace

std::vector<double> draw_initial_state(int dim, double t_start, std::uint64_t trajectory_seed) {
  GaussianStream stream(trajectory_seed);
  const double sd = std::sqrt(1.0 + t_start * t_start);
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (double& v : x) v = sd * stream.next();
  return x;
}

TrajectorySet make_trajectory_set(const VectorField& field, double t_start, double t_end,
                                  int batch, std::uint64_t seed, int oracle_hint) {
  if (batch < 1) throw_invalid("batch must be >= 1");
  TrajectorySet set;
  set.t_start = t_start;
  set.t_end = t_end;
  set.x_init.reserve(static_cast<std::size_t>(batch));
  set.oracle.reserve(static_cast<std::size_t>(batch));
  for (int i = 0; i < batch; ++i) {
    std::vector<double> x =
        draw_initial_state(field.dim, t_start, substream_seed(seed, static_cast<std::uint64_t>(i)));
    set.oracle.push_back(reference_endpoint(field, x, t_start, t_end, oracle_hint));
    set.x_init.push_back(std::move(x));
  }
  return set;
}

BatchOutcome run_batch(const VectorField& field, const TimeGrid& grid,
                       const StepperSpec& stepper, const RxConfig& config,
                       const std::optional<StochasticConfig>& stochastic,
                       const TrajectorySet& set) {
  if (set.x_init.empty()) throw_invalid("run_batch: empty trajectory set");
  BatchOutcome outcome;
  double error_sum = 0.0;
  for (std::size_t i = 0; i < set.x_init.size(); ++i) {
    StochasticSampleResult result;
    if (stochastic && stochastic->eta > 0.0) {
      StochasticConfig stoch = *stochastic;
      stoch.seed = substream_seed(stoch.seed ^ kNoiseStreamSalt, static_cast<std::uint64_t>(i));
      result = sample_stochastic(field, grid, stepper, config, stoch, set.x_init[i]);
    } else {
      SampleResult det = sample(field, grid, stepper, config, set.x_init[i]);
      result.endpoint = std::move(det.endpoint);
      result.nfe = det.nfe;
      result.blocks = std::move(det.blocks);
      result.bootstrap_steps = det.bootstrap_steps;
    }
    double err2 = 0.0;
    const auto& oracle = set.oracle[i];
    for (std::size_t j = 0; j < oracle.size(); ++j) {
      const double d = result.endpoint[j] - oracle[j];
      err2 += d * d;
    }
    error_sum += std::sqrt(err2);
    if (i == 0) {
      outcome.nfe = result.nfe;
      outcome.trajectory0 = std::move(result);
    } else if (result.nfe != outcome.nfe) {
      throw_internal("run_batch: evaluation count varies across a batch");
    }
  }
  outcome.mean_error = error_sum / static_cast<double>(set.x_init.size());
  return outcome;
}

OrderFit fit_order(const std::vector<int>& ladder, const std::vector<double>& errors) {
  if (ladder.size() != errors.size() || ladder.size() < 2)
    throw_invalid("fit_order: need matching ladder/error lists with >= 2 points");
  double max_error = 0.0;
  for (double e : errors) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw_invalid("fit_order: errors must be finite and >= 0");
    max_error = std::max(max_error, e);
  }
  OrderFit fit;
  if (max_error < 1e-12) {
    fit.below_floor = true;  // everything is rounding noise; a slope would be meaningless
    return fit;
  }
  const std::size_t n = ladder.size();
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i] <= 0.0) {
      fit.below_floor = true;
      return fit;
    }
    xs[i] = std::log(static_cast<double>(ladder[i]));
    ys[i] = std::log(errors[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / static_cast<double>(n));
  return fit;
}

// ---------------------------------------------------------------------------
// config parsing
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  throw_invalid("config." + where + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         const std::set<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key()))
      config_error(where, "unknown key '" + item.key() + "'");
  }
}

double require_number(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key)) config_error(where, "missing required key '" + key + "'");
  if (!obj[key].is_number()) config_error(where + "." + key, "must be a number");
  return obj[key].get<double>();
}

double number_or(const json& obj, const std::string& where, const std::string& key,
                 double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) config_error(where + "." + key, "must be a number");
  return obj[key].get<double>();
}

int int_or(const json& obj, const std::string& where, const std::string& key, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) config_error(where + "." + key, "must be an integer");
  return obj[key].get<int>();
}

std::string string_or(const json& obj, const std::string& where, const std::string& key,
                      const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) config_error(where + "." + key, "must be a string");
  return obj[key].get<std::string>();
}

struct FieldSpec {
  std::string name;
  VectorField field;
};

FieldSpec parse_field(const json& obj) {
  if (!obj.is_object()) config_error("field", "must be an object");
  reject_unknown_keys(obj, "field", {"type", "dim", "means", "weights", "value"});
  const std::string type = string_or(obj, "field", "type", "");
  const int dim = int_or(obj, "field", "dim", 1);
  FieldSpec spec;
  spec.name = type;
  if (type == "gaussian_flow") {
    spec.field = gaussian_flow_field(dim);
  } else if (type == "ddim_gamma") {
    spec.field = ddim_gamma_field(dim);
  } else if (type == "constant") {
    std::vector<double> value(static_cast<std::size_t>(dim), 0.0);
    if (obj.contains("value")) {
      if (!obj["value"].is_array()) config_error("field.value", "must be an array of numbers");
      value = obj["value"].get<std::vector<double>>();
    }
    spec.field = constant_field(dim, value);
  } else if (type == "gaussian_mixture") {
    if (!obj.contains("means") || !obj["means"].is_array())
      config_error("field.means", "required array of component means");
    std::vector<std::vector<double>> means;
    for (const auto& m : obj["means"]) {
      if (!m.is_array()) config_error("field.means", "each mean must be an array");
      means.push_back(m.get<std::vector<double>>());
    }
    std::vector<double> weights(means.size(),
                                means.empty() ? 0.0 : 1.0 / static_cast<double>(means.size()));
    if (obj.contains("weights")) {
      if (!obj["weights"].is_array()) config_error("field.weights", "must be an array of numbers");
      weights = obj["weights"].get<std::vector<double>>();
    }
    spec.field = gaussian_mixture_field(dim, means, weights);
  } else {
    config_error("field.type",
                 "expected gaussian_flow, gaussian_mixture, ddim_gamma or constant");
  }
  return spec;
}

struct GridSpec {
  std::string type;
  double T = 1.0;
  double t_min = 0.0;
  double rho = 7.0;
  double ratio = 2.0;
  int N = 10;
  std::vector<double> alphas;
  std::vector<double> times;
  std::string variable = "physical_t";

  bool resizable() const { return type == "uniform" || type == "power" || type == "staggered"; }

  TimeGrid build(int n_override) const {
    const int n = n_override > 0 ? n_override : N;
    if (type == "uniform") return build_uniform_grid(T, n);
    if (type == "power") return build_power_grid(T, t_min, n, rho);
    if (type == "staggered") return build_staggered_grid(T, n, ratio);
    if (type == "gamma") return to_gamma_grid(alphas);
    TimeGrid grid;
    grid.times = times;
    grid.kind = variable == "ddim_gamma" ? VariableKind::ddim_gamma : VariableKind::physical_t;
    grid.validate();
    return grid;
  }
};

GridSpec parse_grid(const json& obj) {
  if (!obj.is_object()) config_error("grid", "must be an object");
  reject_unknown_keys(obj, "grid",
                      {"type", "T", "t_min", "N", "rho", "ratio", "alphas", "times", "variable"});
  GridSpec spec;
  spec.type = string_or(obj, "grid", "type", "");
  if (spec.type == "uniform" || spec.type == "power" || spec.type == "staggered") {
    spec.T = require_number(obj, "grid", "T");
    spec.N = int_or(obj, "grid", "N", 0);
    if (spec.N < 1) config_error("grid.N", "must be a positive integer");
    if (spec.type == "power") {
      spec.t_min = number_or(obj, "grid", "t_min", 0.0);
      spec.rho = number_or(obj, "grid", "rho", 7.0);
    }
    if (spec.type == "staggered") spec.ratio = number_or(obj, "grid", "ratio", 2.0);
  } else if (spec.type == "gamma") {
    if (!obj.contains("alphas") || !obj["alphas"].is_array())
      config_error("grid.alphas", "required array for gamma grids");
    spec.alphas = obj["alphas"].get<std::vector<double>>();
  } else if (spec.type == "explicit") {
    if (!obj.contains("times") || !obj["times"].is_array())
      config_error("grid.times", "required array for explicit grids");
    spec.times = obj["times"].get<std::vector<double>>();
    spec.variable = string_or(obj, "grid", "variable", "physical_t");
  } else {
    config_error("grid.type", "expected uniform, power, staggered, gamma or explicit");
  }
  spec.build(0);  // validate eagerly so errors surface at parse time
  return spec;
}

StepperSpec parse_solver(const json& obj) {
  if (!obj.is_object()) config_error("solver", "must be an object");
  reject_unknown_keys(obj, "solver", {"type", "a1", "a2", "delta", "s"});
  const std::string type = string_or(obj, "solver", "type", "");
  if (type == "euler") return StepperSpec::euler();
  if (type == "heun") return StepperSpec::heun();
  if (type == "rk2") {
    const double a1 = number_or(obj, "solver", "a1", 0.5);
    const double a2 = number_or(obj, "solver", "a2", 0.5);
    const double delta = number_or(obj, "solver", "delta", 1.0);
    return StepperSpec::rk2(a1, a2, delta);
  }
  if (type == "ab") return StepperSpec::adams_bashforth(int_or(obj, "solver", "s", 1));
  config_error("solver.type", "expected euler, heun, rk2 or ab");
}

struct MaskSpec {
  enum class Kind { all, none, last, middle, explicit_list } kind = Kind::all;
  std::size_t m = 0;
  std::vector<bool> values;

  std::vector<bool> build(std::size_t n_blocks) const {
    switch (kind) {
      case Kind::all:
        return mask_all(n_blocks, true);
      case Kind::none:
        return mask_all(n_blocks, false);
      case Kind::last:
        return mask_last(n_blocks, m);
      case Kind::middle:
        return mask_middle(n_blocks, m);
      case Kind::explicit_list:
        if (values.size() != n_blocks)
          throw_invalid("mask list has " + std::to_string(values.size()) +
                        " entries but the schedule has " + std::to_string(n_blocks) + " blocks");
        return values;
    }
    throw_internal("unreachable mask kind");
  }
};

MaskSpec parse_mask(const json& value, const std::string& where) {
  MaskSpec spec;
  if (value.is_string()) {
    const std::string text = value.get<std::string>();
    if (text == "all") {
      spec.kind = MaskSpec::Kind::all;
    } else if (text == "none") {
      spec.kind = MaskSpec::Kind::none;
    } else if (text.rfind("last:", 0) == 0 || text.rfind("middle:", 0) == 0) {
      const auto colon = text.find(':');
      spec.kind = text[0] == 'l' ? MaskSpec::Kind::last : MaskSpec::Kind::middle;
      try {
        const long m = std::stol(text.substr(colon + 1));
        if (m < 0) throw std::invalid_argument("negative");
        spec.m = static_cast<std::size_t>(m);
      } catch (const std::exception&) {
        config_error(where, "mask count after ':' must be a nonnegative integer");
      }
    } else {
      config_error(where, "expected 'all', 'none', 'last:m', 'middle:m' or an array of booleans");
    }
  } else if (value.is_array()) {
    spec.kind = MaskSpec::Kind::explicit_list;
    for (const auto& v : value) {
      if (!v.is_boolean()) config_error(where, "mask array entries must be booleans");
      spec.values.push_back(v.get<bool>());
    }
  } else {
    config_error(where, "expected a string or an array of booleans");
  }
  return spec;
}

struct RxSpec {
  int k = 2;
  int p = 0;
  RxMode mode = RxMode::rx_grid_aware;
  TailPolicy tail = TailPolicy::skip_extrapolation;
  MaskSpec mask;

  RxConfig build(const TimeGrid& grid) const {
    RxConfig config;
    config.k = k;
    config.p = p;
    config.mode = mode;
    config.tail_policy = tail;
    const std::size_t n_blocks = partition_blocks(grid, k, tail).blocks.size();
    config.method_mask = mask.build(n_blocks);
    return config;
  }
};

RxSpec parse_rx(const json& obj, const std::string& where, const RxSpec& base) {
  if (!obj.is_object()) config_error(where, "must be an object");
  reject_unknown_keys(obj, where, {"k", "p", "mode", "tail_policy", "mask"});
  RxSpec spec = base;
  spec.k = int_or(obj, where, "k", base.k);
  if (spec.k < 2) config_error(where + ".k", "block size must be >= 2");
  spec.p = int_or(obj, where, "p", base.p);
  if (spec.p != 0 && spec.p < 2) config_error(where + ".p", "extrapolation exponent must be >= 2");
  if (obj.contains("mode")) spec.mode = rx_mode_from_name(string_or(obj, where, "mode", ""));
  const std::string tail = string_or(obj, where, "tail_policy",
                                     base.tail == TailPolicy::skip_extrapolation ? "skip" : "adjust");
  if (tail == "skip") {
    spec.tail = TailPolicy::skip_extrapolation;
  } else if (tail == "adjust") {
    spec.tail = TailPolicy::adjust_k;
  } else {
    config_error(where + ".tail_policy", "expected 'skip' or 'adjust'");
  }
  if (obj.contains("mask")) spec.mask = parse_mask(obj["mask"], where + ".mask");
  return spec;
}

struct MethodSpec {
  std::string label;
  StepperSpec solver;
  RxSpec rx;
};

struct ExperimentConfig {
  FieldSpec field;
  GridSpec grid;
  StepperSpec solver;
  RxSpec rx;
  std::optional<StochasticConfig> stochastic;
  int batch = 1;
  std::uint64_t seed = 0;
  std::vector<int> n_ladder;
  std::vector<MethodSpec> methods;
  int oracle_hint = 0;
  json echo;  // the raw config, echoed into reports
};

std::string default_method_label(const RxSpec& rx, const StepperSpec& solver) {
  std::string label = std::string(rx_mode_name(rx.mode)) + ":" + solver.label();
  if (rx.mode != RxMode::baseline_only) label += ":k=" + std::to_string(rx.k);
  return label;
}

ExperimentConfig parse_config(const std::string& config_json) {
  json root;
  try {
    root = json::parse(config_json);
  } catch (const json::parse_error& e) {
    throw_parse(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw_parse("config root must be a JSON object");
  reject_unknown_keys(root, "(root)",
                      {"field", "grid", "solver", "rx", "stochastic", "batch", "seed", "n_ladder",
                       "methods", "oracle_hint"});

  ExperimentConfig config;
  config.echo = root;
  if (!root.contains("field")) config_error("field", "missing required section");
  config.field = parse_field(root["field"]);
  if (!root.contains("grid")) config_error("grid", "missing required section");
  config.grid = parse_grid(root["grid"]);
  if (!root.contains("solver")) config_error("solver", "missing required section");
  config.solver = parse_solver(root["solver"]);
  if (root.contains("rx")) config.rx = parse_rx(root["rx"], "rx", RxSpec{});

  if (root.contains("stochastic")) {
    const json& st = root["stochastic"];
    if (!st.is_object()) config_error("stochastic", "must be an object");
    reject_unknown_keys(st, "stochastic", {"eta", "seed"});
    StochasticConfig stoch;
    stoch.eta = number_or(st, "stochastic", "eta", 0.0);
    if (!(stoch.eta >= 0.0)) config_error("stochastic.eta", "must be >= 0");
    if (st.contains("seed")) {
      if (!st["seed"].is_number_unsigned() && !st["seed"].is_number_integer())
        config_error("stochastic.seed", "must be an integer");
      stoch.seed = st["seed"].get<std::uint64_t>();
    }
    config.stochastic = stoch;
  }

  config.batch = int_or(root, "(root)", "batch", 1);
  if (config.batch < 1) config_error("batch", "must be >= 1");
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer())
      config_error("seed", "must be an integer");
    config.seed = root["seed"].get<std::uint64_t>();
  }
  config.oracle_hint = int_or(root, "(root)", "oracle_hint", 0);

  if (root.contains("n_ladder")) {
    if (!root["n_ladder"].is_array()) config_error("n_ladder", "must be an array of integers");
    for (const auto& v : root["n_ladder"]) {
      if (!v.is_number_integer()) config_error("n_ladder", "entries must be integers");
      config.n_ladder.push_back(v.get<int>());
    }
    for (std::size_t i = 0; i + 1 < config.n_ladder.size(); ++i) {
      if (config.n_ladder[i] >= config.n_ladder[i + 1])
        config_error("n_ladder", "must be strictly increasing");
    }
    if (!config.n_ladder.empty() && config.n_ladder.front() < 1)
      config_error("n_ladder", "entries must be positive");
    if (!config.n_ladder.empty() && !config.grid.resizable())
      config_error("n_ladder", "requires a parametric grid (uniform, power or staggered)");
  }

  if (root.contains("methods")) {
    if (!root["methods"].is_array()) config_error("methods", "must be an array");
    std::size_t idx = 0;
    for (const auto& m : root["methods"]) {
      const std::string where = "methods[" + std::to_string(idx) + "]";
      if (!m.is_object()) config_error(where, "must be an object");
      reject_unknown_keys(m, where, {"label", "solver", "k", "p", "mode", "tail_policy", "mask"});
      MethodSpec method;
      method.solver = m.contains("solver") ? parse_solver(m["solver"]) : config.solver;
      json rx_overrides = json::object();
      for (const char* key : {"k", "p", "mode", "tail_policy", "mask"}) {
        if (m.contains(key)) rx_overrides[key] = m[key];
      }
      method.rx = parse_rx(rx_overrides, where, config.rx);
      method.label = string_or(m, where, "label", default_method_label(method.rx, method.solver));
      config.methods.push_back(std::move(method));
      ++idx;
    }
    std::set<std::string> labels;
    for (const auto& m : config.methods) {
      if (!labels.insert(m.label).second)
        config_error("methods", "duplicate label '" + m.label + "'");
    }
  }

  return config;
}

// ---------------------------------------------------------------------------
// report assembly
// ---------------------------------------------------------------------------

struct RunRow {
  std::string method;
  std::string field;
  std::string solver;
  int k = 0;
  int p = 0;
  int N = 0;
  std::uint64_t nfe = 0;
  double error = 0.0;
  double wall_time = 0.0;
};

json row_to_json(const RunRow& row) {
  json j = json::object();
  j["method"] = row.method;
  j["field"] = row.field;
  j["solver"] = row.solver;
  j["k"] = row.k;
  j["p"] = row.p;
  j["N"] = row.N;
  j["nfe"] = row.nfe;
  j["error"] = row.error;
  j["wall_time"] = row.wall_time;
  return j;
}

json per_block_json(const std::vector<BlockDiag>& blocks) {
  json arr = json::array();
  for (const auto& b : blocks) {
    json item = json::object();
    item["index"] = b.index;
    item["t_entry"] = b.t_entry;
    item["t_exit"] = b.t_exit;
    item["extrapolated"] = b.extrapolated;
    if (!b.fallback_reason.empty()) item["fallback_reason"] = b.fallback_reason;
    if (b.bootstrap_steps > 0) item["bootstrap_steps"] = b.bootstrap_steps;
    arr.push_back(std::move(item));
  }
  return arr;
}

json trajectory_json(const StochasticSampleResult& traj) {
  json j = json::object();
  j["nfe"] = traj.nfe;
  j["endpoint"] = traj.endpoint;
  j["per_block"] = per_block_json(traj.blocks);
  if (!traj.noise.empty()) {
    json noise = json::array();
    for (const auto& ev : traj.noise) {
      noise.push_back({{"block", ev.block_index}, {"sigma", ev.sigma}, {"norm", ev.norm}});
    }
    j["noise"] = noise;
  }
  return j;
}

int effective_p(const RxSpec& rx, const StepperSpec& solver) {
  return rx.p != 0 ? rx.p : solver.local_order_p;
}

// Executes one (method, N) cell of an experiment.
RunRow run_cell(const ExperimentConfig& config, const MethodSpec& method, int n_override,
                const TrajectorySet& set, StochasticSampleResult* traj_out) {
  const auto start = std::chrono::steady_clock::now();
  const TimeGrid grid = config.grid.build(n_override);
  const RxConfig rx_config = method.rx.build(grid);
  BatchOutcome outcome =
      run_batch(config.field.field, grid, method.solver, rx_config, config.stochastic, set);
  RunRow row;
  row.method = method.label;
  row.field = config.field.name;
  row.solver = method.solver.label();
  row.k = method.rx.k;
  row.p = effective_p(method.rx, method.solver);
  row.N = static_cast<int>(grid.n_steps());
  row.nfe = outcome.nfe;
  row.error = outcome.mean_error;
  row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (traj_out) *traj_out = std::move(outcome.trajectory0);
  return row;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string report_to_csv(const json& report) {
  std::ostringstream out;
  out << "method,field,solver,k,p,N,nfe,error,slope\n";
  if (report.contains("runs")) {
    for (const auto& row : report["runs"]) {
      out << row["method"].get<std::string>() << ',' << row["field"].get<std::string>() << ','
          << row["solver"].get<std::string>() << ',' << row["k"].get<int>() << ','
          << row["p"].get<int>() << ',' << row["N"].get<int>() << ','
          << row["nfe"].get<std::uint64_t>() << ',' << format_double(row["error"].get<double>())
          << ",\n";
    }
  }
  if (report.contains("fits")) {
    for (const auto& fit : report["fits"]) {
      // Sweep summary rows: parameters echoed, per-run columns left empty.
      out << fit["method"].get<std::string>() << ',' << fit["field"].get<std::string>() << ','
          << fit["solver"].get<std::string>() << ',' << fit["k"].get<int>() << ','
          << fit["p"].get<int>() << ",,,,";
      if (fit.contains("slope")) out << format_double(fit["slope"].get<double>());
      out << '\n';
    }
  }
  return out.str();
}

json make_report_skeleton(const std::string& command, const ExperimentConfig& config) {
  json report = json::object();
  report["schema"] = "rxsolve-report-v1";
  report["command"] = command;
  report["seed"] = config.seed;
  report["batch"] = config.batch;
  report["config"] = config.echo;
  return report;
}

TrajectorySet build_set(const ExperimentConfig& config) {
  const TimeGrid base = config.grid.build(0);
  int hint = config.oracle_hint;
  if (hint <= 0) {
    hint = static_cast<int>(base.n_steps());
    for (int n : config.n_ladder) hint = std::max(hint, n);
  }
  return make_trajectory_set(config.field.field, base.start(), base.end(), config.batch,
                             config.seed, hint);
}

std::vector<MethodSpec> methods_or_default(const ExperimentConfig& config) {
  if (!config.methods.empty()) return config.methods;
  MethodSpec method;
  method.solver = config.solver;
  method.rx = config.rx;
  method.label = default_method_label(config.rx, config.solver);
  return {method};
}

json fit_to_json(const MethodSpec& method, const ExperimentConfig& config,
                 const std::vector<int>& ladder, const std::vector<double>& errors) {
  json j = json::object();
  j["method"] = method.label;
  j["field"] = config.field.name;
  j["solver"] = method.solver.label();
  j["k"] = method.rx.k;
  j["p"] = effective_p(method.rx, method.solver);
  OrderFit fit = fit_order(ladder, errors);
  if (fit.below_floor) {
    j["note"] = "below tolerance floor";
  } else {
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["residual"] = fit.residual;
    j["order"] = fit.order();
  }
  return j;
}

json cmd_solve(const ExperimentConfig& config) {
  json report = make_report_skeleton("solve", config);
  TrajectorySet set = build_set(config);
  MethodSpec method = methods_or_default(config).front();
  StochasticSampleResult traj;
  RunRow row = run_cell(config, method, 0, set, &traj);
  report["runs"] = json::array({row_to_json(row)});
  report["trajectory"] = trajectory_json(traj);
  return report;
}

json cmd_order(const ExperimentConfig& config) {
  if (config.n_ladder.size() < 4)
    config_error("n_ladder", "order estimation needs at least 4 ladder points");
  json report = make_report_skeleton("order", config);
  TrajectorySet set = build_set(config);
  json runs = json::array();
  json fits = json::array();
  for (const MethodSpec& method : methods_or_default(config)) {
    std::vector<double> errors;
    for (int n : config.n_ladder) {
      RunRow row = run_cell(config, method, n, set, nullptr);
      errors.push_back(row.error);
      runs.push_back(row_to_json(row));
    }
    fits.push_back(fit_to_json(method, config, config.n_ladder, errors));
  }
  report["runs"] = std::move(runs);
  report["fits"] = std::move(fits);
  return report;
}

json cmd_compare(const ExperimentConfig& config) {
  const std::vector<MethodSpec> methods = methods_or_default(config);
  if (methods.size() < 2) config_error("methods", "compare needs at least 2 methods");
  std::vector<int> ladder = config.n_ladder;
  if (ladder.empty()) ladder.push_back(config.grid.N);
  json report = make_report_skeleton("compare", config);
  TrajectorySet set = build_set(config);
  json runs = json::array();
  // errors[m][n]
  std::vector<std::vector<double>> errors(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (int n : ladder) {
      RunRow row = run_cell(config, methods[m], config.grid.resizable() ? n : 0, set, nullptr);
      errors[m].push_back(row.error);
      runs.push_back(row_to_json(row));
    }
  }
  json ratios = json::array();
  for (std::size_t a = 0; a < methods.size(); ++a) {
    for (std::size_t b = a + 1; b < methods.size(); ++b) {
      for (std::size_t i = 0; i < ladder.size(); ++i) {
        json r = json::object();
        r["method_a"] = methods[a].label;
        r["method_b"] = methods[b].label;
        r["N"] = ladder[i];
        r["error_ratio_a_over_b"] =
            errors[b][i] == 0.0 ? std::numeric_limits<double>::infinity()
                                : errors[a][i] / errors[b][i];
        ratios.push_back(std::move(r));
      }
    }
  }
  report["runs"] = std::move(runs);
  report["ratios"] = std::move(ratios);
  return report;
}

json cmd_hybrid(const ExperimentConfig& config) {
  json report = make_report_skeleton("hybrid", config);
  TrajectorySet set = build_set(config);

  MethodSpec baseline;
  baseline.solver = config.solver;
  baseline.rx = config.rx;
  baseline.rx.mode = RxMode::baseline_only;
  baseline.rx.mask.kind = MaskSpec::Kind::none;
  baseline.rx.mask.values.clear();
  baseline.label = "baseline";

  MethodSpec hybrid;
  hybrid.solver = config.solver;
  hybrid.rx = config.rx;
  hybrid.label = "hybrid";

  MethodSpec full;
  full.solver = config.solver;
  full.rx = config.rx;
  full.rx.mask.kind = MaskSpec::Kind::all;
  full.rx.mask.values.clear();
  full.label = "rx_full";

  json runs = json::array();
  StochasticSampleResult traj;
  runs.push_back(row_to_json(run_cell(config, baseline, 0, set, nullptr)));
  runs.push_back(row_to_json(run_cell(config, hybrid, 0, set, &traj)));
  runs.push_back(row_to_json(run_cell(config, full, 0, set, nullptr)));
  report["runs"] = std::move(runs);

  const TimeGrid grid = config.grid.build(0);
  const std::size_t n_blocks = partition_blocks(grid, config.rx.k, config.rx.tail).blocks.size();
  report["mask"] = config.rx.mask.build(n_blocks);
  report["trajectory"] = trajectory_json(traj);
  return report;
}

}  // namespace

StepperSpec solver_from_json(const std::string& json_text) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw_parse(std::string("solver spec is not valid JSON: ") + e.what());
  }
  return parse_solver(obj);
}

RxConfig rx_config_from_json(const std::string& json_text, const TimeGrid& grid) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw_parse(std::string("rx spec is not valid JSON: ") + e.what());
  }
  return parse_rx(obj, "rx", RxSpec{}).build(grid);
}

StochasticConfig stochastic_from_json(const std::string& json_text) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw_parse(std::string("stochastic spec is not valid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw_invalid("stochastic spec must be a JSON object");
  reject_unknown_keys(obj, "stochastic", {"eta", "seed"});
  StochasticConfig stoch;
  stoch.eta = number_or(obj, "stochastic", "eta", 0.0);
  if (!(stoch.eta >= 0.0)) throw_invalid("stochastic.eta must be >= 0");
  if (obj.contains("seed")) {
    if (!obj["seed"].is_number_unsigned() && !obj["seed"].is_number_integer())
      throw_invalid("stochastic.seed must be an integer");
    stoch.seed = obj["seed"].get<std::uint64_t>();
  }
  return stoch;
}

std::string trajectory_report_json(const StochasticSampleResult& trajectory) {
  return trajectory_json(trajectory).dump(2) + "\n";
}

std::string run_command(const std::string& command, const std::string& config_json,
                        const std::string& format, const std::uint64_t* seed_override) {
  if (format != "json" && format != "csv")
    throw_invalid("format must be 'json' or 'csv', got '" + format + "'");
  ExperimentConfig config = parse_config(config_json);
  if (seed_override) {
    config.seed = *seed_override;
    config.echo["seed"] = *seed_override;
  }

  json report;
  if (command == "solve") {
    report = cmd_solve(config);
  } else if (command == "order") {
    report = cmd_order(config);
  } else if (command == "compare") {
    report = cmd_compare(config);
  } else if (command == "hybrid") {
    report = cmd_hybrid(config);
  } else {
    throw_invalid("unknown command '" + command + "' (expected solve, order, compare or hybrid)");
  }

  if (format == "csv") return report_to_csv(report);
  return report.dump(2) + "\n";
}

}  // namespace rx
