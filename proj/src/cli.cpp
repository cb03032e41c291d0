// Copyright 2026 The coordlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "coordlab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "coordlab/config.hpp"
#include "coordlab/dynamics.hpp"
#include "coordlab/experiments.hpp"
#include "coordlab/game.hpp"
#include "coordlab/learners.hpp"

namespace coordlab {

namespace {

constexpr std::uint64_t kDefaultSeed = 1;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_double(item, what));
  }
  if (out.empty()) throw UsageError(what + ": empty list");
  return out;
}

// Hierarchy flags are 1-based agent lists, lowest level first.
std::vector<int> parse_hierarchy(const std::string& text, int n) {
  std::vector<int> levels;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    levels.push_back(static_cast<int>(parse_long(item, "hierarchy")) - 1);
  }
  std::vector<int> sorted = levels;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(sorted.size()) != n || sorted[i] != i) {
      throw UsageError("hierarchy: need a permutation of 1.." +
                       std::to_string(n));
    }
  }
  return levels;
}

struct GameFlags {
  std::string game = "two";
  std::optional<double> g;
  std::optional<double> alpha;
  std::optional<double> k;
};

void add_game_flags(CLI::App* cmd, GameFlags* flags) {
  cmd->add_option("--game,--variant", flags->game, "Game variant: two|three")
      ->check(CLI::IsMember({"two", "three"}));
  cmd->add_option("--g", flags->g, "Miscoordination regret");
  cmd->add_option("--alpha", flags->alpha, "Coordination reward (two-action)");
  cmd->add_option("--k", flags->k, "Miscoordination penalty");
}

CoordinationGameSpec game_from_flags(const GameFlags& f) {
  const bool two = f.game == "two";
  if (two) {
    if (f.alpha || f.k) {
      if (!f.alpha || !f.k) {
        throw UsageError("two-action game: give both --alpha and --k");
      }
      const auto spec = CoordinationGameSpec::two_action(*f.alpha, *f.k);
      if (f.g && std::abs(spec.g() - *f.g) > 1e-12) {
        throw UsageError("--g contradicts --alpha/--k");
      }
      return spec;
    }
    if (!f.g) throw UsageError("two-action game: give --g or --alpha/--k");
    return CoordinationGameSpec::from_regret(GameVariant::kTwoAction, *f.g);
  }
  if (f.alpha) throw UsageError("three-action game has no --alpha");
  if (f.k) {
    const auto spec = CoordinationGameSpec::three_action(*f.k);
    if (f.g && std::abs(spec.g() - *f.g) > 1e-12) {
      throw UsageError("--g contradicts --k");
    }
    return spec;
  }
  if (!f.g) throw UsageError("three-action game: give --g or --k");
  return CoordinationGameSpec::from_regret(GameVariant::kThreeAction, *f.g);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open output file '" + path + "'");
  return out;
}

void maybe_timestamp(std::ostream& out, bool enabled) {
  if (!enabled) return;
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  out << "# generated " << std::put_time(std::gmtime(&t), "%FT%TZ") << '\n';
}

UpdateRule rule_from_flags(const std::string& rule_name, double eta,
                           const std::string& hierarchy, int n,
                           std::mt19937_64* eng) {
  const auto kind = rule_from_string(rule_name);
  if (!kind) throw UsageError("unknown rule '" + rule_name + "'");
  UpdateRule rule;
  rule.kind = *kind;
  rule.eta = eta;
  if (rule.kind == RuleKind::kHla) {
    if (hierarchy == "random") {
      if (!eng) throw UsageError("random hierarchy needs a seeded context");
      std::vector<int> perm(n);
      for (int i = 0; i < n; ++i) perm[i] = i;
      for (int i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<int> d(0, i);
        std::swap(perm[i], perm[d(*eng)]);
      }
      rule.hierarchy = perm;
    } else {
      rule.hierarchy = parse_hierarchy(hierarchy, n);
    }
  }
  return rule;
}

// Applies a flat key=value config file to one subcommand invocation by
// translating keys into flags. Only keys whose option is absent from the
// explicit arguments are added, so command-line flags always win. Unknown
// keys are usage errors.
std::vector<std::string> merge_config_args(
    CLI::App& app, const std::vector<std::string>& args) {
  std::string sub_name;
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (sub_name.empty() && !args[i].empty() && args[i][0] != '-') {
      sub_name = args[i];
    }
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    }
  }
  if (config_path.empty()) return args;
  CLI::App* sub = app.get_subcommand_no_throw(sub_name);
  if (sub == nullptr) return args;

  std::vector<const CLI::Option*> explicit_opts;
  for (const std::string& arg : args) {
    if (arg.rfind("--", 0) != 0) continue;
    const std::string name = arg.substr(0, arg.find('='));
    if (const CLI::Option* opt = sub->get_option_no_throw(name)) {
      explicit_opts.push_back(opt);
    }
  }

  std::vector<std::string> merged = args;
  for (const auto& [key, value] : read_key_value_file(config_path)) {
    if (key == "config") {
      throw UsageError("config: file cannot set 'config'");
    }
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      throw UsageError("config: unknown key '" + key + "' for subcommand '" +
                       sub_name + "'");
    }
    if (std::find(explicit_opts.begin(), explicit_opts.end(), opt) !=
        explicit_opts.end()) {
      continue;  // flag given explicitly; it wins
    }
    if (opt->get_expected_min() == 0) {  // boolean flag
      if (value == "true" || value == "1" || value == "yes") {
        merged.push_back("--" + key);
      } else if (value != "false" && value != "0" && value != "no") {
        throw UsageError("config: '" + key + "' expects a boolean");
      }
    } else {
      merged.push_back("--" + key);
      merged.push_back(value);
    }
  }
  return merged;
}

// ---------------------------------------------------------------------------
// check-theorems

int cmd_check_theorems(std::ostream& out) {
  const std::vector<double> etas = {0.25, 0.5, 1.0, 2.0};
  std::set<double> g_set = {0.2, 0.5, 1.0, 2.0, 5.0};
  for (double eta : etas) {
    for (double threshold : {1.0 / (2.0 * eta), 1.0 / (4.0 * eta)}) {
      for (double offset : {1e-3, 0.1, 0.5}) {
        if (threshold - offset > 0.0) g_set.insert(threshold - offset);
        g_set.insert(threshold + offset);
      }
    }
  }
  const std::vector<double> gs(g_set.begin(), g_set.end());
  const std::vector<TheoremCell> cells = theorem_grid(etas, gs);
  out << "rule    eta     g           lambda1       lambda2       class"
         "            consistent\n";
  bool all_ok = true;
  const auto compact = [](double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
  };
  for (const TheoremCell& c : cells) {
    std::ostringstream row;
    row << std::left << std::setw(8) << to_string(c.rule) << std::setw(8)
        << compact(c.eta) << std::setw(12) << compact(c.g) << std::setw(14)
        << compact(c.eigenvalues[0].real()) << std::setw(14)
        << compact(c.eigenvalues[1].real()) << std::setw(17)
        << to_string(c.cls) << (c.consistent ? "yes" : "NO");
    out << row.str() << '\n';
    all_ok = all_ok && c.consistent;
  }
  out << (all_ok ? "all cells consistent\n" : "INCONSISTENT cells found\n");
  return all_ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// phase

struct PhaseArgs {
  std::string rule = "la";
  double g = 1.0;
  double eta = 1.0;
  int res = 21;
  double box_lo = 0.0;
  double box_hi = 1.0;
  std::string start;  // "t1,t2" -> trajectory mode
  double step = 0.01;
  double horizon = 50.0;
  bool constrained = false;
  std::string out_path;
  std::string format = "csv";
  bool timestamp = false;
};

int cmd_phase(const PhaseArgs& a, std::ostream& out) {
  const UpdateRule rule = rule_from_flags(a.rule, a.eta, "1,2", 2, nullptr);
  std::ofstream file;
  std::ostream* sink = &out;
  if (!a.out_path.empty()) {
    file = open_output(a.out_path);
    sink = &file;
  }
  maybe_timestamp(*sink, a.timestamp);
  if (!a.start.empty()) {
    const std::vector<double> t0 = parse_double_list(a.start, "start");
    if (t0.size() != 2) throw UsageError("--start expects theta1,theta2");
    const PayoffTensor game =
        CoordinationGameSpec::from_regret(GameVariant::kTwoAction, a.g)
            .tensor();
    const Trajectory traj = integrate_phase(game, rule, {t0[0], t0[1]}, a.step,
                                            a.horizon, a.constrained);
    if (a.format == "json") {
      nlohmann::ordered_json root;
      root["diverged"] = traj.diverged;
      auto& pts = root["points"] = nlohmann::json::array();
      for (const auto& p : traj.points) pts.push_back({p[0], p[1], p[2]});
      *sink << root.dump(2) << '\n';
    } else {
      write_trajectory_csv(*sink, traj);
    }
    return 0;
  }
  const std::vector<FieldSample> field =
      phase_field(rule, a.g, a.res, a.box_lo, a.box_hi);
  if (a.format == "json") {
    nlohmann::ordered_json rows = nlohmann::json::array();
    for (const FieldSample& s : field) {
      rows.push_back({{"theta1", s.theta1},
                      {"theta2", s.theta2},
                      {"dtheta1", s.dtheta1},
                      {"dtheta2", s.dtheta2}});
    }
    *sink << rows.dump(2) << '\n';
  } else {
    write_field_csv(*sink, field);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// basin

struct BasinArgs {
  std::string rule = "la";
  double g = 1.0;
  double eta = 1.0;
  double lr = 0.05;
  int res = 41;
  int jobs = 0;
  std::string out_path;
  std::string format = "csv";
  bool timestamp = false;
};

int cmd_basin(const BasinArgs& a, std::ostream& out, std::ostream& err) {
  const UpdateRule rule = rule_from_flags(a.rule, a.eta, "1,2", 2, nullptr);
  const PayoffTensor game =
      CoordinationGameSpec::from_regret(GameVariant::kTwoAction, a.g).tensor();
  TrainOptions opts;
  opts.lr = a.lr;
  const BasinMap map = basin_map(game, rule, opts, a.res, a.jobs);
  std::ofstream file;
  std::ostream* sink = &out;
  if (!a.out_path.empty()) {
    file = open_output(a.out_path);
    sink = &file;
  }
  maybe_timestamp(*sink, a.timestamp);
  if (a.format == "json") {
    nlohmann::ordered_json root;
    root["resolution"] = map.resolution;
    root["miscoordination_fraction"] = map.miscoordination_fraction;
    auto& rows = root["points"] = nlohmann::json::array();
    for (const BasinPoint& p : map.points) {
      rows.push_back({{"theta1", p.theta1},
                      {"theta2", p.theta2},
                      {"outcome", to_string(p.outcome)},
                      {"final_value", p.final_value},
                      {"iters", p.iterations}});
    }
    *sink << root.dump(2) << '\n';
  } else {
    write_basin_csv(*sink, map);
  }
  err << "miscoordination_fraction="
      << format_double(map.miscoordination_fraction) << " (global="
      << map.count_global << " local=" << map.count_local
      << " miscoord=" << map.count_miscoord << " other=" << map.count_other
      << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string rule = "naive";
  GameFlags game;
  double eta = 1.0;
  double lr = 0.05;
  std::uint64_t seed = kDefaultSeed;
  std::string hierarchy = "1,2";
  std::string theta0;
  long max_iter = 200000;
  double tol = 1e-8;
  std::string format = "csv";
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const CoordinationGameSpec spec = game_from_flags(a.game);
  const PayoffTensor game = spec.tensor();
  const int n = game.num_agents();
  std::mt19937_64 eng(a.seed);

  JointPolicy theta0 = [&] {
    if (!a.theta0.empty()) {
      const std::vector<double> values = parse_double_list(a.theta0, "theta0");
      if (spec.variant == GameVariant::kTwoAction) {
        if (values.size() != 2) throw UsageError("--theta0 expects 2 values");
        return JointPolicy::reduced(values);
      }
      if (values.size() != 6) throw UsageError("--theta0 expects 6 values");
      return JointPolicy::simplex({{values[0], values[1], values[2]},
                                   {values[3], values[4], values[5]}});
    }
    if (spec.variant == GameVariant::kTwoAction) {
      const double t1 = static_cast<double>(eng() >> 11) * 0x1.0p-53;
      const double t2 = static_cast<double>(eng() >> 11) * 0x1.0p-53;
      return JointPolicy::reduced({t1, t2});
    }
    std::vector<std::vector<double>> blocks(n);
    for (int i = 0; i < n; ++i) {
      blocks[i].resize(3);
      double sum = 0.0;
      for (double& p : blocks[i]) {
        p = -std::log1p(-(static_cast<double>(eng() >> 11) * 0x1.0p-53));
        sum += p;
      }
      for (double& p : blocks[i]) p /= sum;
    }
    return JointPolicy::simplex(std::move(blocks));
  }();

  const UpdateRule rule = rule_from_flags(a.rule, a.eta, a.hierarchy, n, &eng);
  TrainOptions opts;
  opts.lr = a.lr;
  opts.max_iter = a.max_iter;
  opts.tol = a.tol;
  const TrainRun run = train(game, theta0, rule, opts);

  const auto flat = [](const JointPolicy& p) {
    std::vector<double> v;
    for (const auto& b : p.blocks) v.insert(v.end(), b.begin(), b.end());
    return v;
  };
  if (a.format == "json") {
    nlohmann::ordered_json root;
    root["rule"] = to_string(rule.kind);
    root["g"] = spec.g();
    root["eta"] = rule.eta;
    root["lr"] = opts.lr;
    root["seed"] = a.seed;
    root["theta0"] = flat(run.initial);
    root["theta_final"] = flat(run.final_policy);
    root["outcome"] = to_string(run.outcome);
    root["final_value"] = run.final_value;
    root["iters"] = run.iterations;
    root["converged"] = run.converged;
    out << root.dump(2) << '\n';
  } else {
    out << "rule: " << to_string(rule.kind) << "\n";
    out << "g: " << format_double(spec.g()) << "\n";
    out << "theta0:";
    for (double v : flat(run.initial)) out << ' ' << format_double(v);
    out << "\ntheta_final:";
    for (double v : flat(run.final_policy)) out << ' ' << format_double(v);
    out << "\noutcome: " << to_string(run.outcome) << "\n";
    out << "final_value: " << format_double(run.final_value) << "\n";
    out << "iters: " << run.iterations << "\n";
    out << "converged: " << (run.converged ? "true" : "false") << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sweep / fig2

struct SweepArgs {
  std::string game = "three";
  std::string rules = "naive,la,lola,hla";
  std::string g_values = "10,15,20,30,50";
  double eta = 0.1;
  double lr = 0.05;
  int runs = 500;
  std::uint64_t seed = kDefaultSeed;
  std::string init;  // default derived from game
  std::string hierarchy = "random";
  std::string out_dir = "results";
  int jobs = 0;
  bool timestamp = false;
};

int cmd_sweep(const SweepArgs& a, std::ostream& err) {
  SweepConfig cfg;
  cfg.variant =
      a.game == "two" ? GameVariant::kTwoAction : GameVariant::kThreeAction;
  cfg.rules.clear();
  {
    std::stringstream ss(a.rules);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto kind = rule_from_string(item);
      if (!kind) throw UsageError("unknown rule '" + item + "'");
      cfg.rules.push_back(*kind);
    }
  }
  cfg.g_values = parse_double_list(a.g_values, "g");
  cfg.eta = a.eta;
  cfg.lr = a.lr;
  cfg.runs_per_cell = a.runs;
  cfg.master_seed = a.seed;
  if (a.init.empty()) {
    cfg.init = cfg.variant == GameVariant::kTwoAction
                   ? InitDistribution::kUniformBox
                   : InitDistribution::kUniformSimplex;
  } else if (a.init == "uniform-box") {
    cfg.init = InitDistribution::kUniformBox;
  } else if (a.init == "uniform-simplex") {
    cfg.init = InitDistribution::kUniformSimplex;
  } else {
    throw UsageError("--init must be uniform-box or uniform-simplex");
  }
  if (a.hierarchy == "random") {
    cfg.hierarchy_policy = HierarchyPolicy::kRandomPerRun;
  } else {
    cfg.hierarchy_policy = HierarchyPolicy::kFixed;
    cfg.fixed_hierarchy = parse_hierarchy(a.hierarchy, 2);
  }
  cfg.jobs = a.jobs;

  const SweepResult result = run_sweep(cfg);

  std::filesystem::create_directories(a.out_dir);
  const std::string records_path =
      (std::filesystem::path(a.out_dir) / "records.csv").string();
  const std::string aggregates_path =
      (std::filesystem::path(a.out_dir) / "aggregates.json").string();
  {
    std::ofstream f = open_output(records_path);
    maybe_timestamp(f, a.timestamp);
    write_records_csv(f, result);
  }
  {
    std::ofstream f = open_output(aggregates_path);
    write_aggregates_json(f, result.aggregates);
  }
  err << "wrote " << records_path << " and " << aggregates_path << " ("
      << result.records.size() << " runs)\n";
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Learning-anticipation dynamics in cooperative matrix games"};
  app.require_subcommand(1);

  CLI::App* check = app.add_subcommand(
      "check-theorems",
      "Verify saddle/source regions and eigenvalues on default grids");

  PhaseArgs phase_args;
  CLI::App* phase = app.add_subcommand(
      "phase", "Emit a rate field (or one trajectory) for plotting");
  phase->add_option("--rule", phase_args.rule, "naive|la|lola|hla");
  phase->add_option("--g", phase_args.g, "Miscoordination regret")
      ->check(CLI::PositiveNumber);
  phase->add_option("--eta", phase_args.eta, "Prediction length")
      ->check(CLI::PositiveNumber);
  phase->add_option("--res", phase_args.res, "Grid resolution");
  phase->add_option("--box-lo", phase_args.box_lo, "Grid lower corner");
  phase->add_option("--box-hi", phase_args.box_hi, "Grid upper corner");
  phase->add_option("--start", phase_args.start,
                    "theta1,theta2: integrate one trajectory instead");
  phase->add_option("--step", phase_args.step, "Integrator step");
  phase->add_option("--horizon", phase_args.horizon, "Integration horizon");
  phase->add_flag("--constrained", phase_args.constrained,
                  "Clip the trajectory to [0,1]^2");
  phase->add_option("--out", phase_args.out_path, "Output file (default stdout)");
  phase->add_option("--format", phase_args.format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  phase->add_flag("--timestamp", phase_args.timestamp,
                  "Prefix output with a generation timestamp");

  BasinArgs basin_args;
  CLI::App* basin = app.add_subcommand(
      "basin", "Train from an init lattice and map outcomes");
  basin->add_option("--rule", basin_args.rule, "naive|la|lola|hla");
  basin->add_option("--g", basin_args.g, "Miscoordination regret")
      ->check(CLI::PositiveNumber);
  basin->add_option("--eta", basin_args.eta, "Prediction length")
      ->check(CLI::PositiveNumber);
  basin->add_option("--lr", basin_args.lr, "Learning rate")
      ->check(CLI::PositiveNumber);
  basin->add_option("--res", basin_args.res, "Lattice resolution");
  basin->add_option("--jobs", basin_args.jobs, "Worker threads (0 = all)");
  basin->add_option("--out", basin_args.out_path, "Output file (default stdout)");
  basin->add_option("--format", basin_args.format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  basin->add_flag("--timestamp", basin_args.timestamp,
                  "Prefix output with a generation timestamp");

  TrainArgs train_args;
  CLI::App* train_cmd =
      app.add_subcommand("train", "One seeded training run");
  train_cmd->add_option("--rule", train_args.rule, "naive|la|lola|hla");
  add_game_flags(train_cmd, &train_args.game);
  train_cmd->add_option("--eta", train_args.eta, "Prediction length")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train_args.lr, "Learning rate")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train_args.seed, "RNG seed");
  train_cmd->add_option("--hierarchy", train_args.hierarchy,
                        "HLA levels, lowest first (e.g. 1,2) or 'random'");
  train_cmd->add_option("--theta0", train_args.theta0,
                        "Comma list overriding the seeded initialization");
  train_cmd->add_option("--max-iter", train_args.max_iter, "Iteration cap");
  train_cmd->add_option("--tol", train_args.tol, "Convergence tolerance");
  train_cmd->add_option("--format", train_args.format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Seeded multi-run campaign over (rule, g) cells");
  sweep->add_option("--game,--variant", sweep_args.game, "two|three")
      ->check(CLI::IsMember({"two", "three"}));
  sweep->add_option("--rule,--rules", sweep_args.rules, "Comma list of rules");
  sweep->add_option("--g", sweep_args.g_values, "Comma list of regrets");
  sweep->add_option("--eta", sweep_args.eta, "Prediction length")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--lr", sweep_args.lr, "Learning rate")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--runs", sweep_args.runs, "Runs per (rule, g) cell")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--seed", sweep_args.seed, "Master seed");
  sweep->add_option("--init", sweep_args.init,
                    "uniform-box|uniform-simplex (default fits the game)");
  sweep->add_option("--hierarchy", sweep_args.hierarchy,
                    "HLA levels (e.g. 2,1) or 'random' (per run)");
  sweep->add_option("--out", sweep_args.out_dir, "Output directory");
  sweep->add_option("--jobs", sweep_args.jobs, "Worker threads (0 = all)");
  sweep->add_flag("--timestamp", sweep_args.timestamp,
                  "Prefix records.csv with a generation timestamp");

  SweepArgs fig2_args;  // the preset three-action campaign
  CLI::App* fig2 = app.add_subcommand(
      "fig2", "Preset sweep: three-action game, all rules, g=10..50");
  fig2->add_option("--runs", fig2_args.runs, "Runs per (rule, g) cell")
      ->check(CLI::PositiveNumber);
  fig2->add_option("--seed", fig2_args.seed, "Master seed");
  fig2->add_option("--eta", fig2_args.eta, "Prediction length")
      ->check(CLI::PositiveNumber);
  fig2->add_option("--lr", fig2_args.lr, "Learning rate")
      ->check(CLI::PositiveNumber);
  fig2->add_option("--out", fig2_args.out_dir, "Output directory");
  fig2->add_option("--jobs", fig2_args.jobs, "Worker threads (0 = all)");
  fig2->add_flag("--timestamp", fig2_args.timestamp,
                 "Prefix records.csv with a generation timestamp");

  std::string config_path;
  for (CLI::App* cmd : {check, phase, basin, train_cmd, sweep, fig2}) {
    cmd->add_option("--config", config_path,
                    "Flat key=value config mirroring the flags (flags win)");
  }

  std::vector<std::string> effective;
  try {
    effective = merge_config_args(app, args);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  std::vector<std::string> reversed(effective.rbegin(), effective.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (check->parsed()) return cmd_check_theorems(out);
    if (phase->parsed()) return cmd_phase(phase_args, out);
    if (basin->parsed()) return cmd_basin(basin_args, out, err);
    if (train_cmd->parsed()) return cmd_train(train_args, out);
    if (sweep->parsed()) return cmd_sweep(sweep_args, err);
    if (fig2->parsed()) return cmd_sweep(fig2_args, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << "error: no subcommand\n";
  return 2;
}

}  // namespace coordlab
