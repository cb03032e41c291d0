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

#ifndef COORDLAB_EXPERIMENTS_HPP_
#define COORDLAB_EXPERIMENTS_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "coordlab/dynamics.hpp"
#include "coordlab/game.hpp"
#include "coordlab/learners.hpp"

namespace coordlab {

enum class InitDistribution { kUniformBox, kUniformSimplex };
enum class HierarchyPolicy { kFixed, kRandomPerRun };

/// One experiment campaign: every (rule, g) cell is trained `runs_per_cell`
/// times from seeded random initializations.
struct SweepConfig {
  GameVariant variant = GameVariant::kThreeAction;
  std::vector<RuleKind> rules = {RuleKind::kNaive, RuleKind::kLookAhead,
                                 RuleKind::kLola, RuleKind::kHla};
  std::vector<double> g_values = {10, 15, 20, 30, 50};
  double eta = 0.1;
  double lr = 0.05;
  int runs_per_cell = 500;
  std::uint64_t master_seed = 1;
  InitDistribution init = InitDistribution::kUniformSimplex;
  HierarchyPolicy hierarchy_policy = HierarchyPolicy::kRandomPerRun;
  std::vector<int> fixed_hierarchy = {0, 1};
  TrainOptions train_options{};
  int jobs = 0;  // worker threads; 0 = hardware default, 1 = serial

  void validate() const;
};

struct SweepRecord {
  RuleKind rule = RuleKind::kNaive;
  double g = 0.0;
  double eta = 0.0;
  int run = 0;
  std::uint64_t seed = 0;
  std::vector<double> theta0;  // flattened, agent-major
  Outcome outcome = Outcome::kOther;
  double final_value = 0.0;
  long iterations = 0;
};

struct CellStats {
  int runs = 0;
  double mean_value = 0.0;
  double std_value = 0.0;
  double frac_global = 0.0;
  double frac_local = 0.0;
  double frac_miscoord = 0.0;
  double frac_other = 0.0;
};

/// Keyed by rule name, then by g (ascending).
using AggregateStats = std::map<std::string, std::map<double, CellStats>>;

struct SweepResult {
  std::vector<SweepRecord> records;  // canonical order: rule name, g, run
  AggregateStats aggregates;
};

/// Deterministic per-run seed: FNV-1a over (master seed, rule name, IEEE
/// bits of g, run index). Adding rules or g values never perturbs other
/// cells' randomness.
std::uint64_t derive_run_seed(std::uint64_t master_seed, RuleKind rule,
                              double g, int run);

/// Runs the campaign on an OpenMP worker pool (config.jobs threads).
/// Records land in preassigned slots, so output is bit-identical to the
/// serial reference for any thread count.
SweepResult run_sweep(const SweepConfig& config);

/// Strictly sequential reference executor; same outputs as run_sweep.
SweepResult run_sweep_serial(const SweepConfig& config);

/// Recomputes aggregates from a record list (associative fold in canonical
/// order).
AggregateStats aggregate_records(const std::vector<SweepRecord>& records);

void write_records_csv(std::ostream& out, const SweepResult& result);
void write_aggregates_json(std::ostream& out, const AggregateStats& stats);

struct TheoremCell {
  RuleKind rule = RuleKind::kNaive;
  double eta = 0.0;
  double g = 0.0;
  std::array<std::complex<double>, 2> eigenvalues{};
  FixedPointClass cls = FixedPointClass::kDegenerate;
  bool consistent = false;
};

/// closed_form_dynamics + classify on a grid, with each cell checked
/// against its rule's predicted stability region: LA flips saddle -> source
/// at g = 1/(2 eta), LOLA at g = 1/(4 eta), naive and HLA are saddles for
/// every g > 0.
std::vector<TheoremCell> theorem_grid(const std::vector<double>& etas,
                                      const std::vector<double>& gs);

struct FieldSample {
  double theta1 = 0.0, theta2 = 0.0;
  double dtheta1 = 0.0, dtheta2 = 0.0;
};

/// Per-unit-time rates of the rule on a regular grid over
/// [box_lo, box_hi]^2 (two-action game built from g).
std::vector<FieldSample> phase_field(const UpdateRule& rule, double g,
                                     int resolution, double box_lo,
                                     double box_hi);

void write_field_csv(std::ostream& out, const std::vector<FieldSample>& field);
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

struct BasinPoint {
  double theta1 = 0.0, theta2 = 0.0;
  Outcome outcome = Outcome::kOther;
  double final_value = 0.0;
  long iterations = 0;
};

struct BasinMap {
  int resolution = 0;
  std::vector<BasinPoint> points;  // row-major over the init grid
  int count_global = 0;
  int count_local = 0;
  int count_miscoord = 0;
  int count_other = 0;
  // Fraction over the lattice excluding the central fixed point.
  double miscoordination_fraction = 0.0;
};

/// Trains from every point of a resolution x resolution lattice over
/// [0,1]^2; the exact center (0.5, 0.5) is excluded from the statistics.
BasinMap basin_map(const PayoffTensor& game, const UpdateRule& rule,
                   const TrainOptions& options, int resolution, int jobs);

void write_basin_csv(std::ostream& out, const BasinMap& map);

/// Shortest round-trip decimal form of v (to_chars).
std::string format_double(double v);

}  // namespace coordlab

#endif  // COORDLAB_EXPERIMENTS_HPP_
