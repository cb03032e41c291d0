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

#include "coordlab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <nlohmann/json.hpp>

namespace coordlab {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv_mix(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
}

double canonical_unit(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

std::uint64_t bounded(std::mt19937_64& eng, std::uint64_t n) {
  const std::uint64_t limit = ~0ull - ~0ull % n;
  std::uint64_t r;
  do {
    r = eng();
  } while (r >= limit);
  return r % n;
}

JointPolicy draw_theta0(InitDistribution init, const PayoffTensor& game,
                        std::mt19937_64& eng) {
  const int n = game.num_agents();
  if (init == InitDistribution::kUniformBox) {
    std::vector<double> thetas(n);
    for (double& t : thetas) t = canonical_unit(eng);
    return JointPolicy::reduced(std::move(thetas));
  }
  std::vector<std::vector<double>> blocks(n);
  for (int i = 0; i < n; ++i) {
    const int m = game.num_actions(i);
    blocks[i].resize(m);
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
      blocks[i][j] = -std::log1p(-canonical_unit(eng));
      sum += blocks[i][j];
    }
    for (int j = 0; j < m; ++j) blocks[i][j] /= sum;
  }
  return JointPolicy::simplex(std::move(blocks));
}

std::vector<int> draw_hierarchy(int n, std::mt19937_64& eng) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(bounded(eng, static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

struct Task {
  RuleKind rule;
  double g;
  int run;
};

SweepRecord run_one(const SweepConfig& cfg, const Task& task) {
  const CoordinationGameSpec spec =
      CoordinationGameSpec::from_regret(cfg.variant, task.g);
  const PayoffTensor game = spec.tensor();
  const std::uint64_t seed =
      derive_run_seed(cfg.master_seed, task.rule, task.g, task.run);
  std::mt19937_64 eng(seed);
  const JointPolicy theta0 = draw_theta0(cfg.init, game, eng);

  UpdateRule rule;
  rule.kind = task.rule;
  rule.eta = cfg.eta;
  if (task.rule == RuleKind::kHla) {
    rule.hierarchy = cfg.hierarchy_policy == HierarchyPolicy::kRandomPerRun
                         ? draw_hierarchy(game.num_agents(), eng)
                         : cfg.fixed_hierarchy;
  }

  TrainOptions opts = cfg.train_options;
  opts.lr = cfg.lr;
  const TrainRun run = train(game, theta0, rule, opts);

  SweepRecord record;
  record.rule = task.rule;
  record.g = task.g;
  record.eta = rule.eta;
  record.run = task.run;
  record.seed = seed;
  for (const auto& block : theta0.blocks) {
    record.theta0.insert(record.theta0.end(), block.begin(), block.end());
  }
  record.outcome = run.outcome;
  record.final_value = run.final_value;
  record.iterations = run.iterations;
  return record;
}

std::vector<Task> build_tasks(const SweepConfig& cfg) {
  std::vector<RuleKind> rules = cfg.rules;
  std::sort(rules.begin(), rules.end(),
            [](RuleKind a, RuleKind b) { return to_string(a) < to_string(b); });
  std::vector<double> gs = cfg.g_values;
  std::sort(gs.begin(), gs.end());
  std::vector<Task> tasks;
  tasks.reserve(rules.size() * gs.size() *
                static_cast<std::size_t>(cfg.runs_per_cell));
  for (RuleKind rule : rules) {
    for (double g : gs) {
      for (int run = 0; run < cfg.runs_per_cell; ++run) {
        tasks.push_back({rule, g, run});
      }
    }
  }
  return tasks;
}

SweepResult execute(const SweepConfig& cfg, bool parallel) {
  cfg.validate();
  const std::vector<Task> tasks = build_tasks(cfg);
  SweepResult result;
  result.records.resize(tasks.size());
  const long total = static_cast<long>(tasks.size());
  if (parallel) {
#ifdef _OPENMP
    if (cfg.jobs > 0) {
#pragma omp parallel for schedule(dynamic, 4) num_threads(cfg.jobs)
      for (long i = 0; i < total; ++i) {
        result.records[i] = run_one(cfg, tasks[i]);
      }
    } else {
#pragma omp parallel for schedule(dynamic, 4)
      for (long i = 0; i < total; ++i) {
        result.records[i] = run_one(cfg, tasks[i]);
      }
    }
#else
    for (long i = 0; i < total; ++i) {
      result.records[i] = run_one(cfg, tasks[i]);
    }
#endif
  } else {
    for (long i = 0; i < total; ++i) {
      result.records[i] = run_one(cfg, tasks[i]);
    }
  }
  result.aggregates = aggregate_records(result.records);
  return result;
}

}  // namespace

void SweepConfig::validate() const {
  if (runs_per_cell < 1) {
    throw std::invalid_argument("SweepConfig: runs_per_cell must be >= 1");
  }
  if (rules.empty() || g_values.empty()) {
    throw std::invalid_argument("SweepConfig: rules and g values required");
  }
  if (!(lr > 0.0) || !(eta > 0.0)) {
    throw std::invalid_argument("SweepConfig: lr and eta must be > 0");
  }
  for (double g : g_values) {
    CoordinationGameSpec::from_regret(variant, g);  // throws if invalid
  }
  const bool box = init == InitDistribution::kUniformBox;
  if (box != (variant == GameVariant::kTwoAction)) {
    throw std::invalid_argument(
        "SweepConfig: uniform-box init pairs with the two-action game, "
        "uniform-simplex with the three-action game");
  }
}

std::uint64_t derive_run_seed(std::uint64_t master_seed, RuleKind rule,
                              double g, int run) {
  std::uint64_t h = kFnvOffset;
  fnv_mix(h, &master_seed, sizeof(master_seed));
  const std::string name = to_string(rule);
  fnv_mix(h, name.data(), name.size());
  std::uint64_t g_bits;
  static_assert(sizeof(g_bits) == sizeof(g));
  std::memcpy(&g_bits, &g, sizeof(g));
  fnv_mix(h, &g_bits, sizeof(g_bits));
  const std::uint32_t run_u = static_cast<std::uint32_t>(run);
  fnv_mix(h, &run_u, sizeof(run_u));
  return h;
}

SweepResult run_sweep(const SweepConfig& config) {
  if (config.jobs == 1) return execute(config, false);
  return execute(config, true);
}

SweepResult run_sweep_serial(const SweepConfig& config) {
  return execute(config, false);
}

AggregateStats aggregate_records(const std::vector<SweepRecord>& records) {
  AggregateStats stats;
  std::map<std::string, std::map<double, std::vector<const SweepRecord*>>>
      cells;
  for (const SweepRecord& r : records) {
    cells[to_string(r.rule)][r.g].push_back(&r);
  }
  for (const auto& [rule, by_g] : cells) {
    for (const auto& [g, rs] : by_g) {
      CellStats cell;
      cell.runs = static_cast<int>(rs.size());
      double sum = 0.0;
      for (const SweepRecord* r : rs) {
        sum += r->final_value;
        switch (r->outcome) {
          case Outcome::kGlobalEquilibrium: cell.frac_global += 1.0; break;
          case Outcome::kLocalEquilibrium: cell.frac_local += 1.0; break;
          case Outcome::kMiscoordination: cell.frac_miscoord += 1.0; break;
          case Outcome::kOther: cell.frac_other += 1.0; break;
        }
      }
      cell.mean_value = sum / cell.runs;
      double ss = 0.0;
      for (const SweepRecord* r : rs) {
        const double d = r->final_value - cell.mean_value;
        ss += d * d;
      }
      cell.std_value = std::sqrt(ss / cell.runs);
      cell.frac_global /= cell.runs;
      cell.frac_local /= cell.runs;
      cell.frac_miscoord /= cell.runs;
      cell.frac_other /= cell.runs;
      stats[rule][g] = cell;
    }
  }
  return stats;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_records_csv(std::ostream& out, const SweepResult& result) {
  std::size_t theta_cols = 0;
  for (const SweepRecord& r : result.records) {
    theta_cols = std::max(theta_cols, r.theta0.size());
  }
  out << "rule,g,eta,run,seed";
  for (std::size_t c = 0; c < theta_cols; ++c) out << ",theta0_" << (c + 1);
  out << ",outcome,final_value,iters\n";
  for (const SweepRecord& r : result.records) {
    out << to_string(r.rule) << ',' << format_double(r.g) << ','
        << format_double(r.eta) << ',' << r.run << ',' << r.seed;
    for (std::size_t c = 0; c < theta_cols; ++c) {
      out << ',' << (c < r.theta0.size() ? format_double(r.theta0[c]) : "");
    }
    out << ',' << to_string(r.outcome) << ',' << format_double(r.final_value)
        << ',' << r.iterations << '\n';
  }
}

void write_aggregates_json(std::ostream& out, const AggregateStats& stats) {
  nlohmann::ordered_json root;
  for (const auto& [rule, by_g] : stats) {
    nlohmann::ordered_json rule_node;
    for (const auto& [g, cell] : by_g) {
      nlohmann::ordered_json cell_node;
      cell_node["runs"] = cell.runs;
      cell_node["mean_value"] = cell.mean_value;
      cell_node["std_value"] = cell.std_value;
      cell_node["frac_global"] = cell.frac_global;
      cell_node["frac_local"] = cell.frac_local;
      cell_node["frac_miscoord"] = cell.frac_miscoord;
      cell_node["frac_other"] = cell.frac_other;
      rule_node[format_double(g)] = std::move(cell_node);
    }
    root[rule] = std::move(rule_node);
  }
  out << root.dump(2) << '\n';
}

std::vector<TheoremCell> theorem_grid(const std::vector<double>& etas,
                                      const std::vector<double>& gs) {
  constexpr double kThresholdEps = 1e-9;
  std::vector<TheoremCell> cells;
  const RuleKind rules[] = {RuleKind::kNaive, RuleKind::kLookAhead,
                            RuleKind::kLola, RuleKind::kHla};
  for (RuleKind rule : rules) {
    for (double eta : etas) {
      for (double g : gs) {
        if (!(g > 0.0) || !(eta > 0.0)) {
          throw std::invalid_argument("theorem_grid: grids must be positive");
        }
        TheoremCell cell;
        cell.rule = rule;
        cell.eta = eta;
        cell.g = g;
        const FixedPointReport report =
            classify(closed_form_dynamics(rule, g, eta));
        cell.eigenvalues = report.eigenvalues;
        cell.cls = report.cls;
        switch (rule) {
          case RuleKind::kNaive:
          case RuleKind::kHla:
            cell.consistent = cell.cls == FixedPointClass::kSaddle;
            break;
          case RuleKind::kLookAhead:
          case RuleKind::kLola: {
            const double threshold =
                rule == RuleKind::kLookAhead ? 1.0 / (2.0 * eta)
                                             : 1.0 / (4.0 * eta);
            if (g < threshold - kThresholdEps) {
              cell.consistent = cell.cls == FixedPointClass::kSaddle;
            } else if (g > threshold + kThresholdEps) {
              cell.consistent = cell.cls == FixedPointClass::kSource;
            } else {
              cell.consistent = cell.cls == FixedPointClass::kUnstableLine;
            }
            break;
          }
        }
        cells.push_back(cell);
      }
    }
  }
  return cells;
}

std::vector<FieldSample> phase_field(const UpdateRule& rule, double g,
                                     int resolution, double box_lo,
                                     double box_hi) {
  if (resolution < 2) {
    throw std::invalid_argument("phase_field: resolution must be >= 2");
  }
  const PayoffTensor game =
      CoordinationGameSpec::from_regret(GameVariant::kTwoAction, g).tensor();
  std::vector<FieldSample> field;
  field.reserve(static_cast<std::size_t>(resolution) * resolution);
  const double span = box_hi - box_lo;
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      FieldSample s;
      s.theta1 = box_lo + span * i / (resolution - 1);
      s.theta2 = box_lo + span * j / (resolution - 1);
      const StepResult d = rule_delta(
          game, JointPolicy::reduced({s.theta1, s.theta2}), rule);
      s.dtheta1 = d.deltas[0][0] / rule.eta;
      s.dtheta2 = d.deltas[1][0] / rule.eta;
      field.push_back(s);
    }
  }
  return field;
}

void write_field_csv(std::ostream& out, const std::vector<FieldSample>& field) {
  out << "theta1,theta2,dtheta1,dtheta2\n";
  for (const FieldSample& s : field) {
    out << format_double(s.theta1) << ',' << format_double(s.theta2) << ','
        << format_double(s.dtheta1) << ',' << format_double(s.dtheta2) << '\n';
  }
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,theta1,theta2\n";
  for (const auto& p : traj.points) {
    out << format_double(p[0]) << ',' << format_double(p[1]) << ','
        << format_double(p[2]) << '\n';
  }
}

BasinMap basin_map(const PayoffTensor& game, const UpdateRule& rule,
                   const TrainOptions& options, int resolution, int jobs) {
  if (resolution < 2) {
    throw std::invalid_argument("basin_map: resolution must be >= 2");
  }
  BasinMap map;
  map.resolution = resolution;
  const long total = static_cast<long>(resolution) * resolution;
  map.points.resize(total);

  const auto run_point = [&](long idx) {
    const int i = static_cast<int>(idx) / resolution;
    const int j = static_cast<int>(idx) % resolution;
    BasinPoint p;
    p.theta1 = static_cast<double>(i) / (resolution - 1);
    p.theta2 = static_cast<double>(j) / (resolution - 1);
    const TrainRun run =
        train(game, JointPolicy::reduced({p.theta1, p.theta2}), rule, options);
    p.outcome = run.outcome;
    p.final_value = run.final_value;
    p.iterations = run.iterations;
    map.points[idx] = p;
  };

  if (jobs == 1) {
    for (long idx = 0; idx < total; ++idx) run_point(idx);
  } else {
#ifdef _OPENMP
    if (jobs > 0) {
#pragma omp parallel for schedule(dynamic, 8) num_threads(jobs)
      for (long idx = 0; idx < total; ++idx) run_point(idx);
    } else {
#pragma omp parallel for schedule(dynamic, 8)
      for (long idx = 0; idx < total; ++idx) run_point(idx);
    }
#else
    for (long idx = 0; idx < total; ++idx) run_point(idx);
#endif
  }

  long counted = 0;
  for (const BasinPoint& p : map.points) {
    if (p.theta1 == 0.5 && p.theta2 == 0.5) continue;  // the fixed point
    ++counted;
    switch (p.outcome) {
      case Outcome::kGlobalEquilibrium: ++map.count_global; break;
      case Outcome::kLocalEquilibrium: ++map.count_local; break;
      case Outcome::kMiscoordination: ++map.count_miscoord; break;
      case Outcome::kOther: ++map.count_other; break;
    }
  }
  map.miscoordination_fraction =
      counted > 0 ? static_cast<double>(map.count_miscoord) / counted : 0.0;
  return map;
}

void write_basin_csv(std::ostream& out, const BasinMap& map) {
  out << "theta1,theta2,outcome,final_value,iters\n";
  for (const BasinPoint& p : map.points) {
    out << format_double(p.theta1) << ',' << format_double(p.theta2) << ','
        << to_string(p.outcome) << ',' << format_double(p.final_value) << ','
        << p.iterations << '\n';
  }
}

}  // namespace coordlab
