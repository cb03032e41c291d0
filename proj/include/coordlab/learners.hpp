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

#ifndef COORDLAB_LEARNERS_HPP_
#define COORDLAB_LEARNERS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "coordlab/game.hpp"

namespace coordlab {

enum class RuleKind { kNaive, kLookAhead, kLola, kHla };

std::string to_string(RuleKind kind);
std::optional<RuleKind> rule_from_string(const std::string& name);

/// An update rule plus its hyperparameters. `eta` is the prediction length
/// of the anticipated inner step; `hierarchy` (HLA only) lists the agent
/// occupying each level, lowest level first.
struct UpdateRule {
  RuleKind kind = RuleKind::kNaive;
  double eta = 1.0;
  std::vector<int> hierarchy;

  static UpdateRule naive();
  static UpdateRule look_ahead(double eta);
  static UpdateRule lola(double eta);
  static UpdateRule hla(double eta, std::vector<int> hierarchy);
};

/// One rule application: per-agent raw anticipation deltas, shaped like the
/// policy blocks. The training loop turns them into actual updates by
/// scaling with lambda/eta.
struct StepResult {
  std::vector<std::vector<double>> deltas;
};

/// Simultaneous gradient step: delta_i = eta * dV/dtheta_i for every agent.
StepResult naive_delta(const PayoffTensor& game, const JointPolicy& policy,
                       double eta);

/// Look-Ahead (two agents): each agent differentiates the value at the
/// opponent's anticipated parameters, with the anticipated step itself
/// blocked from the derivative (prediction without shaping).
StepResult la_delta(const PayoffTensor& game, const JointPolicy& policy,
                    double eta);

/// LOLA (two agents): as Look-Ahead, but the opponent's anticipated step is
/// differentiated through, adding the shaping term.
StepResult lola_delta(const PayoffTensor& game, const JointPolicy& policy,
                      double eta);

/// Two-agent hierarchical update. The leader shapes the follower's
/// anticipated naive step (differentiated through); the follower updates
/// toward the leader's planned parameters, which it cannot shape.
/// `leader` is a 0-based agent index.
StepResult hla_two_agent_delta(const PayoffTensor& game,
                               const JointPolicy& policy, double eta,
                               int leader);

/// General hierarchical update for n >= 2 agents. `hierarchy[level]` is the
/// 0-based agent at that level, level 0 lowest. Level i's delta is the
/// derivative of the value with every lower level's delta recomputed inside
/// the scope (shaped), higher levels pinned at their already-planned
/// parameters (followed, not shaped). For n = 2 this reproduces
/// hla_two_agent_delta exactly.
StepResult hla_delta(const PayoffTensor& game, const JointPolicy& policy,
                     double eta, const std::vector<int>& hierarchy);

/// One inner-sweep piece of the hierarchical update: the delta of `level`
/// computed inside the outer iteration for `outer_level` (levels above it
/// already hold planned parameters). hla_delta composes the diagonal pieces
/// level == outer_level; the off-diagonal ones are exposed so every sweep
/// branch can be checked in isolation.
std::vector<double> hla_level_delta(const PayoffTensor& game,
                                    const JointPolicy& policy, double eta,
                                    const std::vector<int>& hierarchy,
                                    int level, int outer_level);

/// Dispatch on rule.kind.
StepResult rule_delta(const PayoffTensor& game, const JointPolicy& policy,
                      const UpdateRule& rule);

}  // namespace coordlab

#endif  // COORDLAB_LEARNERS_HPP_
