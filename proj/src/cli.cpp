#include "adoptnet/cli.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "adoptnet/analysis.hpp"
#include "adoptnet/control.hpp"
#include "adoptnet/errors.hpp"
#include "adoptnet/io.hpp"
#include "adoptnet/scenario.hpp"

namespace adoptnet {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

void apply_override(json& root, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override needs key=value, got: " + kv);
  }
  const std::string path = kv.substr(0, eq);
  const json value = parse_override_value(kv.substr(eq + 1));
  json* node = &root;
  std::size_t pos = 0;
  while (true) {
    const auto dot = path.find('.', pos);
    const std::string key =
        dot == std::string::npos ? path.substr(pos) : path.substr(pos, dot - pos);
    if (key.empty()) {
      throw ValidationError("override has an empty path segment: " + kv);
    }
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    pos = dot + 1;
  }
}

json base_json(const Command& cmd) {
  if (!cmd.scenarios.empty()) {
    std::ifstream in(cmd.scenarios.front());
    if (!in) throw IoError("cannot open scenario: " + cmd.scenarios.front());
    try {
      json j;
      in >> j;
      return j;
    } catch (const json::parse_error& e) {
      throw ParseError(cmd.scenarios.front() + ": " + e.what());
    }
  }
  json j;
  j["generator"]["n"] = 10;
  j["seed"] = 0;
  return j;
}

Scenario make_scenario(const Command& cmd,
                       std::optional<std::uint64_t> seed) {
  json j = base_json(cmd);
  for (const std::string& kv : cmd.overrides) apply_override(j, kv);
  if (seed) j["seed"] = *seed;
  const std::filesystem::path base =
      cmd.scenarios.empty()
          ? std::filesystem::path(".")
          : std::filesystem::path(cmd.scenarios.front()).parent_path();
  Scenario sc = scenario_from_json(j.dump(), base);

  if (cmd.channel) {
    ControlSpec fresh = make_control_spec(
        sc.params, channel_from_name(*cmd.channel),
        cmd.budget.value_or(sc.spec.budget));
    fresh.Qa = sc.spec.Qa;
    fresh.Qd = sc.spec.Qd;
    fresh.L = sc.spec.L;
    fresh.linear_effort = sc.spec.linear_effort;
    sc.spec = fresh;
  } else if (cmd.budget) {
    sc.spec.budget = *cmd.budget;
  }
  if (cmd.horizon) sc.mpc.horizon = *cmd.horizon;
  if (cmd.steps) sc.T = *cmd.steps;
  sc.validate();
  return sc;
}

std::pair<std::uint64_t, std::uint64_t> seed_range(
    const Command& cmd, std::uint64_t def_lo, std::uint64_t def_hi) {
  if (cmd.seeds) return *cmd.seeds;
  return {def_lo, def_hi};
}

std::optional<std::uint64_t> single_seed(const Command& cmd) {
  if (cmd.seeds) return cmd.seeds->first;
  return std::nullopt;
}

Eigen::VectorXd parse_comma_vector(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      vals.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ParseError("not a number in control vector: '" + cell + "'");
    }
  }
  Eigen::VectorXd v(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = vals[i];
  }
  return v;
}

void parallel_for(int jobs, int count, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < count;) fn(i);
    });
  }
  for (std::thread& th : pool) th.join();
}

SummaryRow make_summary(std::uint64_t seed, const std::string& channel,
                        bool feasible, const Trajectory& traj,
                        bool linear_effort) {
  SummaryRow row;
  row.seed = seed;
  row.channel = channel;
  row.feasible = feasible;
  if (!traj.states.empty()) {
    const PolicyMetrics m = policy_metrics(traj, linear_effort);
    row.total_adopters = m.total_adopters;
    row.control_cost = m.control_cost;
    row.final_adoption = traj.states.back().a.sum();
  }
  return row;
}

ordered_json constants_json(const ModelParams& p,
                            const EquilibriumReport& rep) {
  const StabilityConstants c = stability_constants(p, rep);
  ordered_json j;
  j["eta"] = c.eta;
  j["nu"] = c.nu;
  j["varphi"] = c.varphi;
  j["rho_bstar"] = c.rho_bstar;
  return j;
}

int cmd_gen(const Command& cmd, std::ostream& out) {
  const auto [lo, hi] = seed_range(cmd, 0, 0);
  std::filesystem::create_directories(cmd.out_dir);
  std::vector<std::string> files;
  for (std::uint64_t seed = lo; seed <= hi; ++seed) {
    const Scenario sc = make_scenario(cmd, seed);
    const std::string name = "scenario_" + std::to_string(seed) + ".json";
    save_scenario(sc, std::filesystem::path(cmd.out_dir) / name);
    files.push_back(name);
  }
  write_manifest(cmd.out_dir, files);
  out << "wrote " << files.size() << " scenario(s) to " << cmd.out_dir
      << "\n";
  return 0;
}

int cmd_simulate(const Command& cmd, std::ostream& out) {
  const Scenario sc = make_scenario(cmd, single_seed(cmd));
  Trajectory traj;
  std::string channel = "none";
  if (cmd.constant_u) {
    Eigen::VectorXd u = parse_comma_vector(*cmd.constant_u);
    if (u.size() == 1 && sc.params.size() > 1) {
      u = Eigen::VectorXd::Constant(sc.params.size(), u[0]);
    }
    traj = simulate(sc.s0, sc.params, sc.T,
                    ControlInput{u, sc.spec.channel});
    channel = channel_name(sc.spec.channel);
  } else {
    traj = simulate(sc.s0, sc.params, sc.T);
  }
  RunRecord rec;
  rec.label = sc.label.empty() ? "run" : sc.label;
  rec.trajectory = traj;
  rec.summary =
      make_summary(sc.seed, channel, true, traj, sc.spec.linear_effort);
  write_outputs({rec}, cmd.out_dir);
  out << "simulated " << sc.T << " steps; final adoption "
      << format_double(rec.summary->final_adoption) << "\n";
  return 0;
}

int cmd_analyze(const Command& cmd, std::ostream& out) {
  const Scenario sc = make_scenario(cmd, single_seed(cmd));
  const EquilibriumReport free_rep =
      certify(sc.params, adoption_free_equilibrium(sc.params));

  ordered_json j;
  j["adoption_free"] = ordered_json::parse(equilibrium_report_json(free_rep));
  j["adoption_free"]["constants"] = constants_json(sc.params, free_rep);
  std::ostringstream text;
  text << "[adoption_free]\n" << equilibrium_report_text(free_rep);

  j["diffused"] = nullptr;
  if (free_rep.r0_min > 1.0) {
    try {
      const EquilibriumReport diff = certify(
          sc.params,
          diffused_equilibrium(sc.params, default_equilibrium_guess(sc.params),
                               AnalysisOptions{}));
      j["diffused"] = ordered_json::parse(equilibrium_report_json(diff));
      j["diffused"]["constants"] = constants_json(sc.params, diff);
      text << "\n[diffused]\n" << equilibrium_report_text(diff);
    } catch (const NoConvergenceError& e) {
      j["diffused_note"] = e.what();
      text << "\n[diffused]\nnote=" << e.what() << '\n';
    }
  }

  std::filesystem::create_directories(cmd.out_dir);
  {
    std::ofstream f(std::filesystem::path(cmd.out_dir) / "analysis.json",
                    std::ios::binary);
    if (!f) throw IoError("cannot write analysis.json in " + cmd.out_dir);
    f << j.dump(2) << '\n';
  }
  {
    std::ofstream f(std::filesystem::path(cmd.out_dir) / "analysis.txt",
                    std::ios::binary);
    if (!f) throw IoError("cannot write analysis.txt in " + cmd.out_dir);
    f << text.str();
  }
  write_manifest(cmd.out_dir, {"analysis.json", "analysis.txt"});
  out << "threshold_verdict "
      << threshold_verdict_name(free_rep.threshold_verdict) << "; r0 in ["
      << format_double(free_rep.r0_min) << ", "
      << format_double(free_rep.r0_max) << "]\n";
  return 0;
}

int cmd_ccp(const Command& cmd, std::ostream& out) {
  const Scenario sc = make_scenario(cmd, single_seed(cmd));
  CcpConfig ccfg;
  ccfg.seed = sc.seed;
  ccfg.rollout_start = sc.s0;
  const PolicyResult res = solve_ccp(sc.params, sc.spec, ccfg);

  RunRecord rec;
  rec.label = (sc.label.empty() ? "run" : sc.label) + "_ccp";
  rec.report_json = policy_result_json(res, sc.spec.channel);
  if (res.feasible) {
    rec.trajectory = simulate(sc.s0, sc.params, sc.T,
                              ControlInput{res.u, sc.spec.channel});
  } else {
    rec.trajectory.states.push_back(sc.s0);
  }
  rec.summary = make_summary(sc.seed, channel_name(sc.spec.channel),
                             res.feasible, rec.trajectory,
                             sc.spec.linear_effort);
  write_outputs({rec}, cmd.out_dir);
  out << "ccp " << (res.feasible ? "feasible" : "infeasible");
  if (res.feasible) out << ", cost " << format_double(res.cost);
  out << "\n";
  return 0;
}

int cmd_mpc(const Command& cmd, std::ostream& out) {
  const Scenario sc = make_scenario(cmd, single_seed(cmd));
  MpcConfig cfg = sc.mpc;
  bool have_target = cfg.target.a.size() > 0 && cfg.u_bar.size() > 0;
  std::string note;
  if (!have_target) {
    CcpConfig ccfg;
    ccfg.seed = sc.seed;
    ccfg.rollout_start = sc.s0;
    const PolicyResult ccp = solve_ccp(sc.params, sc.spec, ccfg);
    if (ccp.feasible) {
      cfg.target = ccp.equilibrium->state();
      cfg.u_bar = ccp.u;
      have_target = true;
    } else {
      note = "no steady target: " + ccp.note;
    }
  }

  RunRecord rec;
  rec.label = (sc.label.empty() ? "run" : sc.label) + "_mpc";
  bool feasible = false;
  ordered_json rj;
  rj["channel"] = channel_name(sc.spec.channel);
  if (have_target) {
    try {
      const ClosedLoopResult loop =
          mpc_run(sc.s0, sc.params, sc.spec, cfg, sc.T);
      rec.trajectory = loop.trajectory;
      feasible = loop.completed;
      rj["completed"] = loop.completed;
      rj["lost_feasibility_at"] = loop.lost_feasibility_at;
      rj["cost_series"] = loop.cost_series;
    } catch (const InfeasibleError& e) {
      note = e.what();
    }
  }
  if (rec.trajectory.states.empty()) rec.trajectory.states.push_back(sc.s0);
  rj["feasible"] = feasible;
  if (!note.empty()) rj["note"] = note;
  rec.report_json = rj.dump(2) + "\n";
  rec.summary = make_summary(sc.seed, channel_name(sc.spec.channel), feasible,
                             rec.trajectory, sc.spec.linear_effort);
  write_outputs({rec}, cmd.out_dir);
  out << "mpc " << (feasible ? "completed" : "infeasible") << "\n";
  return 0;
}

struct FrontierRow {
  std::uint64_t seed = 0;
  std::string method;
  bool feasible = false;
  double total_adopters = 0;
  double control_cost = 0;
  double final_adoption = 0;
};

int cmd_compare(const Command& cmd, std::ostream& out, std::ostream& err) {
  const auto [lo, hi] = seed_range(cmd, 0, 9);
  const int count = static_cast<int>(hi - lo + 1);
  std::vector<std::vector<SummaryRow>> channel_rows(count);
  std::vector<std::vector<FrontierRow>> frontier_rows(count);
  std::vector<std::string> errors(count);

  parallel_for(cmd.jobs, count, [&](int i) {
    const std::uint64_t seed = lo + static_cast<std::uint64_t>(i);
    try {
      const Scenario sc = make_scenario(cmd, seed);
      for (const Channel channel :
           {Channel::Opinion, Channel::AdoptionRate,
            Channel::Dissatisfaction}) {
        ControlSpec cspec =
            make_control_spec(sc.params, channel, sc.spec.budget);
        cspec.Qa = sc.spec.Qa;
        cspec.Qd = sc.spec.Qd;
        cspec.L = sc.spec.L;
        cspec.linear_effort = sc.spec.linear_effort;
        CcpConfig ccfg;
        ccfg.seed = seed;
        ccfg.rollout_start = sc.s0;
        const PolicyResult res = solve_ccp(sc.params, cspec, ccfg);
        Trajectory traj;
        if (res.feasible) {
          traj = simulate(sc.s0, sc.params, sc.T,
                          ControlInput{res.u, channel});
        }
        channel_rows[i].push_back(make_summary(seed, channel_name(channel),
                                               res.feasible, traj,
                                               cspec.linear_effort));
        if (channel != sc.spec.channel) continue;

        FrontierRow ccp_row;
        ccp_row.seed = seed;
        ccp_row.method = "ccp";
        ccp_row.feasible = res.feasible;
        if (res.feasible) {
          const PolicyMetrics m = policy_metrics(traj, cspec.linear_effort);
          ccp_row.total_adopters = m.total_adopters;
          ccp_row.control_cost = m.control_cost;
          ccp_row.final_adoption = traj.states.back().a.sum();
        }
        frontier_rows[i].push_back(ccp_row);

        FrontierRow mpc_row;
        mpc_row.seed = seed;
        mpc_row.method = "mpc";
        if (res.feasible) {
          MpcConfig cfg = sc.mpc;
          cfg.target = res.equilibrium->state();
          cfg.u_bar = res.u;
          try {
            const ClosedLoopResult loop =
                mpc_run(sc.s0, sc.params, cspec, cfg, sc.T);
            const PolicyMetrics m =
                policy_metrics(loop.trajectory, cspec.linear_effort);
            mpc_row.feasible = loop.completed;
            mpc_row.total_adopters = m.total_adopters;
            mpc_row.control_cost = m.control_cost;
            mpc_row.final_adoption = loop.trajectory.states.back().a.sum();
          } catch (const InfeasibleError&) {
          }
        }
        frontier_rows[i].push_back(mpc_row);
      }
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  std::filesystem::create_directories(cmd.out_dir);
  std::vector<SummaryRow> channels;
  for (const auto& rows : channel_rows) {
    channels.insert(channels.end(), rows.begin(), rows.end());
  }
  write_summary_csv(std::filesystem::path(cmd.out_dir) / "channels.csv",
                    channels);
  {
    std::ofstream f(std::filesystem::path(cmd.out_dir) / "frontier.csv",
                    std::ios::binary);
    if (!f) throw IoError("cannot write frontier.csv in " + cmd.out_dir);
    f << "seed,method,feasible,total_adopters,control_cost,final_adoption\n";
    for (const auto& rows : frontier_rows) {
      for (const FrontierRow& r : rows) {
        f << r.seed << ',' << r.method << ',' << (r.feasible ? 1 : 0) << ','
          << format_double(r.total_adopters) << ','
          << format_double(r.control_cost) << ','
          << format_double(r.final_adoption) << '\n';
      }
    }
  }
  write_manifest(cmd.out_dir, {"channels.csv", "frontier.csv"});
  int failures = 0;
  for (int i = 0; i < count; ++i) {
    if (!errors[i].empty()) {
      ++failures;
      err << "seed " << (lo + static_cast<std::uint64_t>(i)) << ": "
          << errors[i] << "\n";
    }
  }
  out << "compared " << count << " seed(s), " << failures
      << " recorded error(s)\n";
  return 0;
}

int cmd_sweep(const Command& cmd, std::ostream& out, std::ostream& err) {
  const auto [lo, hi] = seed_range(cmd, 0, 9);
  const int count = static_cast<int>(hi - lo + 1);
  std::vector<std::optional<SummaryRow>> rows(count);
  std::vector<std::string> errors(count);

  parallel_for(cmd.jobs, count, [&](int i) {
    const std::uint64_t seed = lo + static_cast<std::uint64_t>(i);
    try {
      const Scenario sc = make_scenario(cmd, seed);
      RunRecord rec;
      rec.label = sc.label.empty() ? ("seed" + std::to_string(seed))
                                   : sc.label;
      rec.trajectory = simulate(sc.s0, sc.params, sc.T);
      const EquilibriumReport rep =
          certify(sc.params, adoption_free_equilibrium(sc.params));
      rec.report_json = equilibrium_report_json(rep);
      rec.summary =
          make_summary(seed, "none", true, rec.trajectory,
                       sc.spec.linear_effort);
      write_outputs({rec}, std::filesystem::path(cmd.out_dir) /
                               ("seed_" + std::to_string(seed)));
      rows[i] = rec.summary;
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  std::filesystem::create_directories(cmd.out_dir);
  std::vector<SummaryRow> summary;
  for (const auto& row : rows) {
    if (row) summary.push_back(*row);
  }
  write_summary_csv(std::filesystem::path(cmd.out_dir) / "summary.csv",
                    summary);
  write_manifest(cmd.out_dir, {"summary.csv"});
  int failures = 0;
  for (int i = 0; i < count; ++i) {
    if (!errors[i].empty()) {
      ++failures;
      err << "seed " << (lo + static_cast<std::uint64_t>(i)) << ": "
          << errors[i] << "\n";
    }
  }
  out << "swept " << count << " seed(s), " << failures
      << " recorded error(s)\n";
  return 0;
}

}  // namespace

int run_command(const Command& cmd, std::ostream& out, std::ostream& err) {
  try {
    if (cmd.subcommand == "gen") return cmd_gen(cmd, out);
    if (cmd.subcommand == "simulate") return cmd_simulate(cmd, out);
    if (cmd.subcommand == "analyze") return cmd_analyze(cmd, out);
    if (cmd.subcommand == "ccp") return cmd_ccp(cmd, out);
    if (cmd.subcommand == "mpc") return cmd_mpc(cmd, out);
    if (cmd.subcommand == "compare") return cmd_compare(cmd, out, err);
    if (cmd.subcommand == "sweep") return cmd_sweep(cmd, out, err);
    err << "unknown subcommand: " << cmd.subcommand << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"coupled adoption-opinion network simulation and control"};
  app.require_subcommand(1);

  Command cmd;
  std::string seeds_text;
  std::string channel;
  double budget = 0;
  int horizon = 0;
  int steps = 0;
  std::string constant_u;

  std::vector<CLI::Option*> seeds_opts, channel_opts, budget_opts,
      horizon_opts, steps_opts, u_opts;

  const auto add_common = [&](CLI::App* sub, bool with_u) {
    sub->add_option("--scenario", cmd.scenarios,
                    "scenario JSON (omit to generate; see --override)");
    seeds_opts.push_back(
        sub->add_option("--seeds", seeds_text, "seed or range a..b"));
    channel_opts.push_back(
        sub->add_option("--channel", channel, "control channel")
            ->check(CLI::IsMember({"opinion", "beta", "delta"})));
    budget_opts.push_back(
        sub->add_option("--budget", budget, "per-step control budget"));
    horizon_opts.push_back(
        sub->add_option("--horizon", horizon, "receding horizon length"));
    steps_opts.push_back(
        sub->add_option("--steps", steps, "simulated steps T"));
    sub->add_option("--out", cmd.out_dir, "output directory");
    sub->add_option("--jobs", cmd.jobs, "parallel workers");
    sub->add_option("--override", cmd.overrides,
                    "scenario override, dotted.path=value (repeatable)");
    if (with_u) {
      u_opts.push_back(sub->add_option(
          "--u", constant_u,
          "constant control vector, comma separated (fixed-policy rollout)"));
    }
  };

  add_common(app.add_subcommand("simulate", "roll the dynamics forward"),
             true);
  add_common(app.add_subcommand(
                 "analyze", "equilibria, thresholds, stability certificates"),
             false);
  add_common(app.add_subcommand("ccp", "synthesize a constant control"),
             false);
  add_common(app.add_subcommand("mpc", "receding-horizon closed loop"),
             false);
  add_common(app.add_subcommand("compare",
                                "constant vs receding-horizon frontier"),
             false);
  add_common(app.add_subcommand("sweep", "seed sweep of uncontrolled runs"),
             false);
  add_common(app.add_subcommand("gen", "write generated scenario files"),
             false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  cmd.subcommand = app.get_subcommands().front()->get_name();
  const auto used = [](const std::vector<CLI::Option*>& opts) {
    return std::any_of(opts.begin(), opts.end(),
                       [](const CLI::Option* o) { return o->count() > 0; });
  };
  try {
    if (used(seeds_opts)) {
      const auto pos = seeds_text.find("..");
      if (pos == std::string::npos) {
        const std::uint64_t s = std::stoull(seeds_text);
        cmd.seeds = {s, s};
      } else {
        const std::uint64_t a = std::stoull(seeds_text.substr(0, pos));
        const std::uint64_t b = std::stoull(seeds_text.substr(pos + 2));
        if (b < a) throw ValidationError("--seeds range end before start");
        cmd.seeds = {a, b};
      }
    }
  } catch (const std::invalid_argument&) {
    err << "error: --seeds expects an integer or a..b\n";
    return 2;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  if (used(channel_opts)) cmd.channel = channel;
  if (used(budget_opts)) cmd.budget = budget;
  if (used(horizon_opts)) cmd.horizon = horizon;
  if (used(steps_opts)) cmd.steps = steps;
  if (used(u_opts)) cmd.constant_u = constant_u;

  return run_command(cmd, out, err);
}

}  // namespace adoptnet
