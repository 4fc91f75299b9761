#include "adoptnet/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adoptnet/analysis.hpp"
#include "adoptnet/errors.hpp"
#include "adoptnet/io.hpp"
#include "adoptnet/network.hpp"
#include "adoptnet/rng.hpp"

namespace adoptnet {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void check_keys(const json& obj, const char* where,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known =
        std::any_of(allowed.begin(), allowed.end(),
                    [&](const char* k) { return it.key() == k; });
    if (!known) {
      throw ParseError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

const json& require(const json& obj, const char* field, const char* where) {
  const auto it = obj.find(field);
  if (it == obj.end()) {
    throw ParseError(std::string("missing field '") + field + "' in " + where);
  }
  return *it;
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + " must be a number");
  return j.get<double>();
}

Eigen::VectorXd get_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + " must be an array of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw ParseError(where + "[" + std::to_string(i) + "] must be a number");
    }
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd get_matrix(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + " must be an array of rows");
  const std::size_t rows = j.size();
  Eigen::MatrixXd m(rows, rows == 0 ? 0 : j[0].size());
  for (std::size_t i = 0; i < rows; ++i) {
    const Eigen::VectorXd row =
        get_vector(j[i], where + "[" + std::to_string(i) + "]");
    if (row.size() != m.cols()) {
      throw ParseError(where + " rows must have equal length");
    }
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

Network parse_network(const json& obj, const char* inline_key,
                      const char* csv_key, const char* where,
                      const std::filesystem::path& base_dir) {
  const bool has_inline = obj.contains(inline_key);
  const bool has_csv = obj.contains(csv_key);
  if (has_inline == has_csv) {
    throw ParseError(std::string(where) + " needs exactly one of '" +
                     inline_key + "' and '" + csv_key + "'");
  }
  if (has_inline) {
    return Network::from_weights(
        get_matrix(obj[inline_key], std::string(where) + "." + inline_key));
  }
  if (!obj[csv_key].is_string()) {
    throw ParseError(std::string(where) + "." + csv_key + " must be a path");
  }
  const std::filesystem::path ref = obj[csv_key].get<std::string>();
  const std::filesystem::path full =
      ref.is_absolute() ? ref : base_dir / ref;
  return Network::from_weights(read_matrix_csv(full));
}

ordered_json vec_json(const Eigen::VectorXd& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

ordered_json mat_json(const Eigen::MatrixXd& m) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    arr.push_back(row);
  }
  return arr;
}

ScenarioRanges parse_ranges(const json& obj, ScenarioRanges base) {
  check_keys(obj, "generator.ranges",
             {"beta_min", "beta_max", "delta_min", "delta_max", "rate_sum_min",
              "rate_sum_max", "rate_ratio_min", "rate_ratio_max", "alpha_min",
              "x0_min", "x0_max", "density", "a0_value", "a0_fraction"});
  auto pick = [&](const char* key, double& slot) {
    if (obj.contains(key)) {
      slot = get_number(obj[key], std::string("generator.ranges.") + key);
    }
  };
  pick("beta_min", base.beta_min);
  pick("beta_max", base.beta_max);
  pick("delta_min", base.delta_min);
  pick("delta_max", base.delta_max);
  pick("rate_sum_min", base.rate_sum_min);
  pick("rate_sum_max", base.rate_sum_max);
  pick("rate_ratio_min", base.rate_ratio_min);
  pick("rate_ratio_max", base.rate_ratio_max);
  pick("alpha_min", base.alpha_min);
  pick("x0_min", base.x0_min);
  pick("x0_max", base.x0_max);
  pick("density", base.density);
  pick("a0_value", base.a0_value);
  pick("a0_fraction", base.a0_fraction);
  return base;
}

void apply_control_block(Scenario& sc, const json& obj) {
  check_keys(obj, "control",
             {"channel", "budget", "u_upper", "Qa", "Qd", "L",
              "linear_effort"});
  Channel channel = sc.spec.channel;
  if (obj.contains("channel")) {
    if (!obj["channel"].is_string()) {
      throw ParseError("control.channel must be a string");
    }
    channel = channel_from_name(obj["channel"].get<std::string>());
  }
  double budget = sc.spec.budget;
  if (obj.contains("budget")) {
    budget = get_number(obj["budget"], "control.budget");
  }
  bool linear = sc.spec.linear_effort;
  if (obj.contains("linear_effort")) {
    if (!obj["linear_effort"].is_boolean()) {
      throw ParseError("control.linear_effort must be a bool");
    }
    linear = obj["linear_effort"].get<bool>();
  }
  sc.spec = make_control_spec(sc.params, channel, budget);
  sc.spec.linear_effort = linear;
  if (obj.contains("u_upper")) {
    sc.spec.u_upper = get_vector(obj["u_upper"], "control.u_upper");
  }
  if (obj.contains("Qa")) sc.spec.Qa = get_vector(obj["Qa"], "control.Qa");
  if (obj.contains("Qd")) sc.spec.Qd = get_vector(obj["Qd"], "control.Qd");
  if (obj.contains("L")) sc.spec.L = get_vector(obj["L"], "control.L");
}

void apply_mpc_block(Scenario& sc, const json& obj) {
  check_keys(obj, "mpc",
             {"horizon", "terminal_tolerance", "terminal_penalty_weight",
              "penalty_growth", "max_penalty_rounds", "target_deviation_goal",
              "solver", "target", "u_bar"});
  MpcConfig& cfg = sc.mpc;
  if (obj.contains("horizon")) {
    if (!obj["horizon"].is_number_integer()) {
      throw ParseError("mpc.horizon must be an integer");
    }
    cfg.horizon = obj["horizon"].get<int>();
  }
  auto pick = [&](const char* key, double& slot) {
    if (obj.contains(key)) {
      slot = get_number(obj[key], std::string("mpc.") + key);
    }
  };
  pick("terminal_tolerance", cfg.terminal_tolerance);
  pick("terminal_penalty_weight", cfg.terminal_penalty_weight);
  pick("penalty_growth", cfg.penalty_growth);
  pick("target_deviation_goal", cfg.target_deviation_goal);
  if (obj.contains("max_penalty_rounds")) {
    if (!obj["max_penalty_rounds"].is_number_integer()) {
      throw ParseError("mpc.max_penalty_rounds must be an integer");
    }
    cfg.max_penalty_rounds = obj["max_penalty_rounds"].get<int>();
  }
  if (obj.contains("solver")) {
    const json& s = obj["solver"];
    check_keys(s, "mpc.solver",
               {"max_iters", "step_tolerance", "fd_gradients"});
    if (s.contains("max_iters")) {
      if (!s["max_iters"].is_number_integer()) {
        throw ParseError("mpc.solver.max_iters must be an integer");
      }
      cfg.solver.max_iters = s["max_iters"].get<int>();
    }
    if (s.contains("step_tolerance")) {
      cfg.solver.step_tolerance =
          get_number(s["step_tolerance"], "mpc.solver.step_tolerance");
    }
    if (s.contains("fd_gradients")) {
      if (!s["fd_gradients"].is_boolean()) {
        throw ParseError("mpc.solver.fd_gradients must be a bool");
      }
      cfg.solver.fd_gradients = s["fd_gradients"].get<bool>();
    }
  }
  if (obj.contains("target")) {
    const json& t = obj["target"];
    check_keys(t, "mpc.target", {"a", "d", "x"});
    cfg.target.a = get_vector(require(t, "a", "mpc.target"), "mpc.target.a");
    cfg.target.d = get_vector(require(t, "d", "mpc.target"), "mpc.target.d");
    cfg.target.x = get_vector(require(t, "x", "mpc.target"), "mpc.target.x");
  }
  if (obj.contains("u_bar")) {
    cfg.u_bar = get_vector(obj["u_bar"], "mpc.u_bar");
  }
}

}  // namespace

void ScenarioRanges::validate() const {
  auto ordered = [](double lo, double hi, const char* what) {
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw ValidationError(std::string("scenario ranges: bad ") + what);
    }
  };
  ordered(beta_min, beta_max, "beta range");
  ordered(delta_min, delta_max, "delta range");
  ordered(rate_sum_min, rate_sum_max, "rate sum range");
  ordered(rate_ratio_min, rate_ratio_max, "rate ratio range");
  ordered(x0_min, x0_max, "anchor range");
  if (beta_min < 0 || beta_max > 1 || delta_min < 0 || delta_max > 1) {
    throw ValidationError("scenario ranges: rates must stay in [0, 1]");
  }
  if (!(rate_sum_min > 0) || !(rate_sum_max < 1)) {
    throw ValidationError(
        "scenario ranges: gamma + theta must stay inside (0, 1)");
  }
  if (!(rate_ratio_min > 0) || !(rate_ratio_max < 1)) {
    throw ValidationError(
        "scenario ranges: the gamma share must stay inside (0, 1)");
  }
  if (!(alpha_min > 0) || !(alpha_min < 1)) {
    throw ValidationError("scenario ranges: alpha_min must lie in (0, 1)");
  }
  if (x0_min < 0 || x0_max > 1) {
    throw ValidationError("scenario ranges: anchors must stay in [0, 1]");
  }
  if (density < 0 || density > 1) {
    throw ValidationError("scenario ranges: density must lie in [0, 1]");
  }
  if (a0_value < 0 || a0_value > 1 || a0_fraction < 0 || a0_fraction > 1) {
    throw ValidationError("scenario ranges: bad initial adoption");
  }
}

ScenarioRanges case_study_ranges() {
  ScenarioRanges r;
  r.beta_min = 0.4;
  r.beta_max = 0.9;
  r.delta_min = 0.1;
  r.delta_max = 0.25;
  r.x0_min = 0.35;
  r.x0_max = 0.65;
  r.density = 0.3;
  return r;
}

void Scenario::validate() const {
  params.validate();
  s0.validate();
  const int n = params.size();
  if (static_cast<int>(s0.a.size()) != n) {
    throw ValidationError("scenario: initial state size mismatch");
  }
  spec.validate(n);
  if (T < 0) throw ValidationError("scenario: T must be >= 0");
  if (mpc.horizon < 1) throw ValidationError("scenario: horizon must be >= 1");
}

Scenario random_scenario(int n, std::uint64_t seed,
                         const ScenarioRanges& ranges) {
  if (n < 1) throw ValidationError("random_scenario: n must be >= 1");
  ranges.validate();
  Rng rng(seed, 0x5C30);
  const auto sub_seed = [&]() {
    return static_cast<std::uint64_t>(
        rng.uniform_int(0, std::numeric_limits<std::int64_t>::max()));
  };

  Scenario sc;
  sc.seed = seed;
  sc.label = "seed" + std::to_string(seed);
  sc.params.W = random_strongly_connected(n, ranges.density, sub_seed());
  sc.params.Wt = random_strongly_connected(n, ranges.density, sub_seed());

  auto draw_vec = [&](double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
    return v;
  };
  sc.params.beta = draw_vec(ranges.beta_min, ranges.beta_max);
  sc.params.delta = draw_vec(ranges.delta_min, ranges.delta_max);
  sc.params.gamma.resize(n);
  sc.params.theta.resize(n);
  for (int i = 0; i < n; ++i) {
    const double sum = rng.uniform(ranges.rate_sum_min, ranges.rate_sum_max);
    const double share =
        rng.uniform(ranges.rate_ratio_min, ranges.rate_ratio_max);
    sc.params.gamma[i] = sum * share;
    sc.params.theta[i] = sum * (1.0 - share);
  }
  sc.params.alpha.resize(n);
  sc.params.lambda.resize(n);
  sc.params.xi.resize(n);
  for (int i = 0; i < n; ++i) {
    const double a = rng.uniform(ranges.alpha_min, 1.0);
    const double split = rng.uniform();
    sc.params.alpha[i] = a;
    sc.params.lambda[i] = (1.0 - a) * split;
    sc.params.xi[i] = (1.0 - a) * (1.0 - split);
  }
  sc.params.x0 = draw_vec(ranges.x0_min, ranges.x0_max);

  sc.s0.a = Eigen::VectorXd::Zero(n);
  sc.s0.d = Eigen::VectorXd::Zero(n);
  sc.s0.x = sc.params.x0;
  const int k = std::max(
      1, static_cast<int>(std::llround(ranges.a0_fraction * n)));
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int j = 0; j < std::min(k, n); ++j) {
    const int pick = static_cast<int>(rng.uniform_int(j, n - 1));
    std::swap(idx[j], idx[pick]);
    sc.s0.a[idx[j]] = ranges.a0_value;
  }

  sc.spec = make_control_spec(sc.params, Channel::Opinion, 1.0);
  sc.validate();
  return sc;
}

Scenario scenario_from_json(const std::string& text,
                            const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario JSON: ") + e.what());
  }
  if (!root.is_object()) throw ParseError("scenario JSON: not an object");
  check_keys(root, "scenario",
             {"label", "seed", "T", "generator", "params", "s0", "control",
              "mpc"});

  Scenario sc;
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned() &&
        !root["seed"].is_number_integer()) {
      throw ParseError("scenario.seed must be an integer");
    }
    sc.seed = root["seed"].get<std::uint64_t>();
  }

  const bool has_generator = root.contains("generator");
  const bool has_params = root.contains("params") || root.contains("s0");
  if (has_generator && has_params) {
    throw ParseError(
        "scenario: 'generator' and explicit 'params'/'s0' are exclusive");
  }
  if (has_generator) {
    const json& gen = root["generator"];
    check_keys(gen, "generator", {"n", "preset", "ranges"});
    const json& nj = require(gen, "n", "generator");
    if (!nj.is_number_integer()) {
      throw ParseError("generator.n must be an integer");
    }
    ScenarioRanges ranges;
    if (gen.contains("preset")) {
      if (!gen["preset"].is_string()) {
        throw ParseError("generator.preset must be a string");
      }
      const std::string preset = gen["preset"].get<std::string>();
      if (preset == "case_study") {
        ranges = case_study_ranges();
      } else if (preset != "default") {
        throw ParseError("generator.preset must be 'default' or 'case_study'");
      }
    }
    if (gen.contains("ranges")) ranges = parse_ranges(gen["ranges"], ranges);
    const Scenario generated =
        random_scenario(nj.get<int>(), sc.seed, ranges);
    sc.params = generated.params;
    sc.s0 = generated.s0;
    sc.spec = generated.spec;
    sc.label = generated.label;
  } else {
    const json& pj = require(root, "params", "scenario");
    check_keys(pj, "params",
               {"beta", "gamma", "theta", "delta", "alpha", "lambda", "xi",
                "x0", "W", "W_csv", "Wt", "Wt_csv"});
    sc.params.beta = get_vector(require(pj, "beta", "params"), "params.beta");
    sc.params.gamma =
        get_vector(require(pj, "gamma", "params"), "params.gamma");
    sc.params.theta =
        get_vector(require(pj, "theta", "params"), "params.theta");
    sc.params.delta =
        get_vector(require(pj, "delta", "params"), "params.delta");
    sc.params.alpha =
        get_vector(require(pj, "alpha", "params"), "params.alpha");
    sc.params.lambda =
        get_vector(require(pj, "lambda", "params"), "params.lambda");
    sc.params.xi = get_vector(require(pj, "xi", "params"), "params.xi");
    sc.params.x0 = get_vector(require(pj, "x0", "params"), "params.x0");
    sc.params.W = parse_network(pj, "W", "W_csv", "params", base_dir);
    sc.params.Wt = parse_network(pj, "Wt", "Wt_csv", "params", base_dir);

    const json& sj = require(root, "s0", "scenario");
    check_keys(sj, "s0", {"a", "d", "x"});
    sc.s0.a = get_vector(require(sj, "a", "s0"), "s0.a");
    sc.s0.d = get_vector(require(sj, "d", "s0"), "s0.d");
    sc.s0.x = get_vector(require(sj, "x", "s0"), "s0.x");
    sc.spec = make_control_spec(sc.params, Channel::Opinion, 1.0);
  }

  if (root.contains("label")) {
    if (!root["label"].is_string()) {
      throw ParseError("scenario.label must be a string");
    }
    sc.label = root["label"].get<std::string>();
  }
  if (root.contains("T")) {
    if (!root["T"].is_number_integer()) {
      throw ParseError("scenario.T must be an integer");
    }
    sc.T = root["T"].get<int>();
  }
  if (root.contains("control")) apply_control_block(sc, root["control"]);
  if (root.contains("mpc")) apply_mpc_block(sc, root["mpc"]);
  sc.validate();
  return sc;
}

std::string scenario_to_json(const Scenario& sc) {
  ordered_json j;
  j["label"] = sc.label;
  j["seed"] = sc.seed;
  j["T"] = sc.T;
  ordered_json pj;
  pj["beta"] = vec_json(sc.params.beta);
  pj["gamma"] = vec_json(sc.params.gamma);
  pj["theta"] = vec_json(sc.params.theta);
  pj["delta"] = vec_json(sc.params.delta);
  pj["alpha"] = vec_json(sc.params.alpha);
  pj["lambda"] = vec_json(sc.params.lambda);
  pj["xi"] = vec_json(sc.params.xi);
  pj["x0"] = vec_json(sc.params.x0);
  pj["W"] = mat_json(sc.params.W.weights());
  pj["Wt"] = mat_json(sc.params.Wt.weights());
  j["params"] = pj;
  ordered_json sj;
  sj["a"] = vec_json(sc.s0.a);
  sj["d"] = vec_json(sc.s0.d);
  sj["x"] = vec_json(sc.s0.x);
  j["s0"] = sj;
  ordered_json cj;
  cj["channel"] = channel_name(sc.spec.channel);
  cj["budget"] = sc.spec.budget;
  cj["u_upper"] = vec_json(sc.spec.u_upper);
  cj["Qa"] = vec_json(sc.spec.Qa);
  cj["Qd"] = vec_json(sc.spec.Qd);
  cj["L"] = vec_json(sc.spec.L);
  cj["linear_effort"] = sc.spec.linear_effort;
  j["control"] = cj;
  ordered_json mj;
  mj["horizon"] = sc.mpc.horizon;
  mj["terminal_tolerance"] = sc.mpc.terminal_tolerance;
  mj["terminal_penalty_weight"] = sc.mpc.terminal_penalty_weight;
  mj["penalty_growth"] = sc.mpc.penalty_growth;
  mj["max_penalty_rounds"] = sc.mpc.max_penalty_rounds;
  mj["target_deviation_goal"] = sc.mpc.target_deviation_goal;
  ordered_json solver;
  solver["max_iters"] = sc.mpc.solver.max_iters;
  solver["step_tolerance"] = sc.mpc.solver.step_tolerance;
  solver["fd_gradients"] = sc.mpc.solver.fd_gradients;
  mj["solver"] = solver;
  if (sc.mpc.target.a.size() > 0) {
    ordered_json tj;
    tj["a"] = vec_json(sc.mpc.target.a);
    tj["d"] = vec_json(sc.mpc.target.d);
    tj["x"] = vec_json(sc.mpc.target.x);
    mj["target"] = tj;
  }
  if (sc.mpc.u_bar.size() > 0) mj["u_bar"] = vec_json(sc.mpc.u_bar);
  j["mpc"] = mj;
  return j.dump(2) + "\n";
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str(), path.parent_path());
}

void save_scenario(const Scenario& sc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << scenario_to_json(sc);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

double calibrate_r0_max_below(ModelParams& p, double target) {
  if (!(target > 0.05)) {
    throw ValidationError("calibrate_r0_max_below: target too small");
  }
  const double tgt = target - 0.01;
  // the uncoupled leak 1 - delta_i lower-bounds the spectral radius
  const double floor = 1.0 - tgt + 0.01;
  for (int i = 0; i < p.size(); ++i) {
    p.delta[i] = std::max(p.delta[i], floor);
  }
  auto value = [&](double scale) {
    ModelParams q = p;
    q.beta *= scale;
    return r0_extremes(q).second;
  };
  if (value(1.0) <= tgt) return r0_extremes(p).second;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (value(mid) <= tgt) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  p.beta *= lo;
  return r0_extremes(p).second;
}

double calibrate_r0_min_above(ModelParams& p, double target) {
  const double tgt = target + 0.01;
  auto current = [&]() { return r0_extremes(p).first; };
  if (current() > tgt) return current();

  const double beta_max = p.beta.maxCoeff();
  if (beta_max > 0) {
    const double smax = 1.0 / beta_max;
    auto value = [&](double scale) {
      ModelParams q = p;
      q.beta *= scale;
      return r0_extremes(q).first;
    };
    if (value(smax) > tgt) {
      double lo = 1.0, hi = smax;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (value(mid) > tgt) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      p.beta *= hi;
      return current();
    }
    p.beta *= smax;
  }

  auto value_delta = [&](double scale) {
    ModelParams q = p;
    q.delta *= scale;
    return r0_extremes(q).first;
  };
  if (value_delta(0.0) <= tgt) {
    // not reachable by rate scaling alone; report what the extreme yields
    p.delta.setZero();
    return current();
  }
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (value_delta(mid) > tgt) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  p.delta *= lo;
  return current();
}

}  // namespace adoptnet
