#include "cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "reach/errors.hpp"

namespace cli {

namespace {

using Command = Outcome (*)(const Options&);

// Options is shared by every subcommand, so per-command defaults are applied
// after parsing rather than through CLI11 default values.
using ModelDefaults = std::map<const CLI::App*, std::string>;

void add_model(CLI::App* sub, Options& o, const std::string& fallback, ModelDefaults& defaults) {
  defaults[sub] = fallback;
  sub->add_option("--model", o.model,
                  "double-pendulum | double-pendulum-linear | ou:a=<v> | double-well | file:<path> (default: " +
                      fallback + ")");
}

void add_noise_levels(CLI::App* sub, Options& o) {
  auto* e = sub->add_option("--eps", o.eps, "noise levels ε (comma separated)")->delimiter(',');
  auto* i = sub->add_option("--inv-eps", o.inv_eps, "noise levels given as 1/ε (comma separated)")->delimiter(',');
  e->excludes(i);
}

void add_integrator(CLI::App* sub, Options& o) {
  sub->add_option("--dt", o.dt, "time step")->capture_default_str();
  sub->add_option("--t-max", o.t_max, "horizon / censoring time (simulate: 10)")->capture_default_str();
  sub->add_option("--x0", o.x0, "initial state (comma separated; default: equilibrium)")->delimiter(',');
  sub->add_flag("--bridge", o.bridge, "Brownian-bridge correction for crossings between grid points");
  sub->add_flag("--interpolate", o.interpolate, "refine exit times by linear interpolation of the level");
}

void add_monte_carlo(CLI::App* sub, Options& o) {
  add_noise_levels(sub, o);
  add_integrator(sub, o);
  sub->add_option("--trials", o.trials, "Monte Carlo trials per noise level")->capture_default_str();
  sub->add_option("--seed", o.seed, "master seed")->capture_default_str();
}

void write_manifest(const std::string& command, const std::vector<std::string>& args, const Options& o,
                    const Outcome& outcome, double seconds) {
  nlohmann::json m;
  m["tool"] = "reach";
  m["version"] = REACH_VERSION;
  m["subcommand"] = command;
  m["args"] = args;
  m["parameters"] = outcome.parameters;
  m["outputs"] = outcome.outputs;
  m["wall_seconds"] = seconds;
  std::ofstream f(o.out + ".manifest.json");
  if (!f) throw reach::ArgumentError("cannot write manifest next to '" + o.out + "'");
  f << m.dump(2) << '\n';
}

int replay(const Options& o) {
  std::ifstream in(o.manifest);
  if (!in) throw reach::ArgumentError("cannot open manifest '" + o.manifest + "'");
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    throw reach::ArgumentError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!m.contains("args") || !m["args"].is_array()) throw reach::ArgumentError("manifest has no 'args' array");
  auto args = m["args"].get<std::vector<std::string>>();
  if (!args.empty() && args.front() == "replay") throw reach::ArgumentError("refusing to replay a replay");
  if (!o.out.empty()) {
    bool replaced = false;
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
      if (args[i] == "--out") {
        args[i + 1] = o.out;
        replaced = true;
      }
    for (auto& a : args)
      if (a.rfind("--out=", 0) == 0) {
        a = "--out=" + o.out;
        replaced = true;
      }
    if (!replaced) {
      args.push_back("--out");
      args.push_back(o.out);
    }
  }
  return run(args);
}

}  // namespace

std::vector<double> resolve_eps(const Options& o) {
  std::vector<double> eps = o.eps;
  for (double v : o.inv_eps) {
    if (!(v > 0.0)) throw reach::ArgumentError("--inv-eps values must be positive");
    eps.push_back(1.0 / v);
  }
  if (eps.empty()) throw reach::ArgumentError("give noise levels with --eps or --inv-eps");
  for (double v : eps)
    if (!(v > 0.0)) throw reach::ArgumentError("--eps values must be positive");
  return eps;
}

std::string derived_path(const std::string& out, const std::string& suffix) {
  const std::string ext = ".csv";
  std::string stem = out;
  if (stem.size() > ext.size() && stem.compare(stem.size() - ext.size(), ext.size(), ext) == 0)
    stem.resize(stem.size() - ext.size());
  return stem + suffix;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Reachability analysis for randomly perturbed Hamiltonian systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", REACH_VERSION);
  Options o;
  ModelDefaults model_defaults;
  std::vector<std::pair<CLI::App*, Command>> commands;
  auto add = [&](const std::string& name, const std::string& help, Command fn) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--out", o.out, "result CSV (default: <command>.csv)");
    sub->add_option("--threads", o.threads, "worker threads (default: REACH_THREADS or all cores)");
    commands.emplace_back(sub, fn);
    return sub;
  };

  auto* simulate = add("simulate", "sample one trajectory", cmd_simulate);
  add_model(simulate, o, "double-pendulum", model_defaults);
  add_noise_levels(simulate, o);
  add_integrator(simulate, o);
  simulate->add_option("--stride", o.stride, "record every k-th step")->capture_default_str();
  simulate->add_option("--seed", o.seed, "master seed")->capture_default_str();

  auto* mfet = add("mfet", "mean first exit time sweep and log-linear slope", cmd_mfet);
  add_model(mfet, o, "double-pendulum", model_defaults);
  mfet->add_option("--domain", o.domain, "domain to exit from")->required();
  add_monte_carlo(mfet, o);
  mfet->add_flag("--weighted", o.weighted, "weight the slope fit by (mean/stderr)²");

  auto* hitprob = add("hitprob", "probability of reaching a target before a horizon", cmd_hitprob);
  add_model(hitprob, o, "ou", model_defaults);
  hitprob->add_option("--target", o.target, "target set B")->required();
  hitprob->add_option("--horizon", o.horizon, "time horizon T")->required();
  add_monte_carlo(hitprob, o);

  auto* committor = add("committor", "probability of reaching B before A", cmd_committor);
  add_model(committor, o, "ou", model_defaults);
  committor->add_option("--avoid", o.avoid, "set A")->required();
  committor->add_option("--target", o.target, "set B")->required();
  add_monte_carlo(committor, o);

  auto* infl = add("inf-l", "infimum of the controllability function on a boundary", cmd_inf_l);
  add_model(infl, o, "double-pendulum", model_defaults);
  infl->add_option("--domain", o.domain, "domain whose boundary is searched")->required();
  infl->add_option("--starts", o.starts, "multistart count")->capture_default_str();
  infl->add_option("--max-iter", o.max_iter, "iterations per local run")->capture_default_str();
  infl->add_option("--seed", o.seed, "start sampling seed")->capture_default_str();
  infl->add_flag("--eliminate-momenta", o.eliminate_momenta,
                 "optimize positions only with p = 0 (valid for position-only boundaries)");

  auto* linearize = add("linearize", "drift and noise matrices at the equilibrium", cmd_linearize);
  add_model(linearize, o, "double-pendulum", model_defaults);
  linearize->add_option("--x0", o.x0, "linearization point (default: equilibrium)")->delimiter(',');

  auto* lyapunov = add("lyapunov", "stationary covariance from the Lyapunov equation", cmd_lyapunov);
  add_model(lyapunov, o, "double-pendulum-linear", model_defaults);

  auto* free = add("free-energy", "free energy in resolved coordinates", cmd_free_energy);
  add_model(free, o, "double-pendulum", model_defaults);
  add_noise_levels(free, o);
  free->add_option("--resolve", o.resolve, "resolved coordinates (1-based, comma separated)")
      ->delimiter(',')
      ->required();
  free->add_option("--grid", o.grid, "lo,hi,count applied to every resolved coordinate")->delimiter(',');
  free->add_option("--at", o.points, "evaluation point z (comma separated; repeatable)");
  free->add_flag("--closed-form", o.closed_form, "integrate momenta analytically");
  free->add_flag("--limit", o.limit, "extrapolate to ε → 0 instead of evaluating at --eps");
  free->add_option("--nodes", o.nodes, "tensor grid nodes per axis")->capture_default_str();
  free->add_option("--half-width", o.half_width, "tensor grid half-width in local standard deviations")
      ->capture_default_str();

  add("verify", "run the built-in invariant and oracle checks", cmd_verify);

  CLI::App* replay_cmd = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  replay_cmd->add_option("manifest", o.manifest, "manifest JSON")->required();
  replay_cmd->add_option("--out", o.out, "override the result path");

  std::vector<const char*> argv{"reach"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (replay_cmd->parsed()) return replay(o);
    for (const auto& [sub, fn] : commands) {
      if (!sub->parsed()) continue;
      if (o.out.empty()) o.out = sub->get_name() + ".csv";
      if (sub == simulate && sub->count("--t-max") == 0) o.t_max = 10.0;
      if (auto it = model_defaults.find(sub); it != model_defaults.end() && sub->count("--model") == 0)
        o.model = it->second;
      const auto start = std::chrono::steady_clock::now();
      Outcome outcome = fn(o);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      outcome.parameters["out"] = o.out;
      outcome.parameters["threads"] = o.threads;
      write_manifest(sub->get_name(), args, o, outcome, seconds);
      return outcome.status;
    }
  } catch (const reach::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace cli
