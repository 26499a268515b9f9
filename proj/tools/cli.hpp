#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace cli {

/// Options shared by the subcommands; each subcommand registers the subset it uses.
struct Options {
  std::string model;
  std::string domain;
  std::string avoid;
  std::string target;
  std::vector<double> eps;
  std::vector<double> inv_eps;
  std::vector<double> x0;
  std::size_t trials = 120;
  double dt = 1e-3;
  double t_max = 1e4;
  double horizon = 1.0;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  bool bridge = false;
  bool interpolate = false;
  bool weighted = false;
  std::string out;

  // simulate
  std::size_t stride = 10;
  // inf-l
  std::size_t starts = 64;
  std::size_t max_iter = 500;
  bool eliminate_momenta = false;
  // free-energy
  std::vector<std::size_t> resolve;
  std::vector<double> grid;
  std::vector<std::string> points;
  bool closed_form = false;
  bool limit = false;
  std::size_t nodes = 64;
  double half_width = 8.0;
  // replay
  std::string manifest;
};

/// What a command reports back for its manifest.
struct Outcome {
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<std::string> outputs;
  int status = 0;
};

/// Runs one invocation (arguments without the program name) and returns the
/// process exit code: 0 ok, 1 numerical failure, 2 usage error.
int run(const std::vector<std::string>& args);

std::vector<double> resolve_eps(const Options& o);
std::string derived_path(const std::string& out, const std::string& suffix);

Outcome cmd_simulate(const Options& o);
Outcome cmd_mfet(const Options& o);
Outcome cmd_hitprob(const Options& o);
Outcome cmd_committor(const Options& o);
Outcome cmd_inf_l(const Options& o);
Outcome cmd_linearize(const Options& o);
Outcome cmd_lyapunov(const Options& o);
Outcome cmd_free_energy(const Options& o);
Outcome cmd_verify(const Options& o);

}  // namespace cli
