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

#include "coordlab/learners.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coordlab/dual.hpp"

namespace coordlab {

namespace {

using DualBlock = std::vector<DualScalar>;
using DualBlocks = std::vector<DualBlock>;

DualBlocks to_dual(const std::vector<std::vector<double>>& blocks) {
  DualBlocks out(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    out[i].assign(blocks[i].begin(), blocks[i].end());
  }
  return out;
}

DualScalar eval(const PayoffTensor& game, PolicyMode mode,
                const DualBlocks& blocks) {
  return value_of_blocks(game, mode, blocks);
}

void check_two_agents(const PayoffTensor& game, const char* rule) {
  if (game.num_agents() != 2) {
    throw std::invalid_argument(std::string(rule) +
                                ": defined for exactly 2 agents");
  }
}

void check_finite(const StepResult& r, const char* rule) {
  for (const auto& block : r.deltas) {
    for (double d : block) {
      if (!std::isfinite(d)) {
        throw std::domain_error(std::string(rule) + ": non-finite delta");
      }
    }
  }
}

std::vector<double> primals(const DualBlock& block, const char* rule) {
  std::vector<double> out(block.size());
  for (std::size_t c = 0; c < block.size(); ++c) {
    out[c] = block[c].primal();
    if (!std::isfinite(out[c])) {
      throw std::domain_error(std::string(rule) + ": non-finite delta");
    }
  }
  return out;
}

// Anticipated opponent parameters theta_j + eta * dV/dtheta_j, evaluated at
// (possibly perturbed) current blocks. With `shaped` the anticipated step
// keeps its dependence on live perturbations; otherwise it is blocked.
DualBlock anticipated_block(const PayoffTensor& game, PolicyMode mode,
                            const DualBlocks& blocks, int j, double eta,
                            bool shaped) {
  const DualBlock grad = gradient_block_scope(
      [&](const DualBlock& bj) {
        DualBlocks b = blocks;
        b[j] = bj;
        return eval(game, mode, b);
      },
      blocks[j]);
  DualBlock out(blocks[j].size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    const DualScalar step = DualScalar(eta) * grad[c];
    out[c] = blocks[j][c] + (shaped ? step : stop_gradient(step));
  }
  return out;
}

StepResult anticipation_delta(const PayoffTensor& game,
                              const JointPolicy& policy, double eta,
                              bool shaped, const char* rule) {
  check_two_agents(game, rule);
  policy.validate_shape(game);
  if (!(eta > 0.0)) {
    throw std::invalid_argument(std::string(rule) + ": eta must be > 0");
  }
  StepResult result;
  result.deltas.resize(2);
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    const DualBlocks base = to_dual(policy.blocks);
    const DualBlock grad_i = gradient_block_scope(
        [&](const DualBlock& bi) {
          DualBlocks b = base;
          b[i] = bi;
          b[j] = anticipated_block(game, policy.mode, b, j, eta, shaped);
          return eval(game, policy.mode, b);
        },
        base[i]);
    result.deltas[i] = primals(grad_i, rule);
    for (double& d : result.deltas[i]) d *= eta;
  }
  return result;
}

}  // namespace

std::string to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::kNaive: return "naive";
    case RuleKind::kLookAhead: return "la";
    case RuleKind::kLola: return "lola";
    case RuleKind::kHla: return "hla";
  }
  return "?";
}

std::optional<RuleKind> rule_from_string(const std::string& name) {
  if (name == "naive") return RuleKind::kNaive;
  if (name == "la") return RuleKind::kLookAhead;
  if (name == "lola") return RuleKind::kLola;
  if (name == "hla") return RuleKind::kHla;
  return std::nullopt;
}

UpdateRule UpdateRule::naive() { return {RuleKind::kNaive, 1.0, {}}; }

UpdateRule UpdateRule::look_ahead(double eta) {
  return {RuleKind::kLookAhead, eta, {}};
}

UpdateRule UpdateRule::lola(double eta) { return {RuleKind::kLola, eta, {}}; }

UpdateRule UpdateRule::hla(double eta, std::vector<int> hierarchy) {
  return {RuleKind::kHla, eta, std::move(hierarchy)};
}

StepResult naive_delta(const PayoffTensor& game, const JointPolicy& policy,
                       double eta) {
  policy.validate_shape(game);
  if (!(eta > 0.0)) {
    throw std::invalid_argument("naive_delta: eta must be > 0");
  }
  const int n = game.num_agents();
  StepResult result;
  result.deltas.resize(n);
  for (int i = 0; i < n; ++i) {
    result.deltas[i] = gradient_block(
        [&](const DualBlock& bi) {
          DualBlocks b = to_dual(policy.blocks);
          b[i] = bi;
          return eval(game, policy.mode, b);
        },
        policy.blocks[i]);
    for (double& d : result.deltas[i]) d *= eta;
  }
  check_finite(result, "naive_delta");
  return result;
}

StepResult la_delta(const PayoffTensor& game, const JointPolicy& policy,
                    double eta) {
  return anticipation_delta(game, policy, eta, /*shaped=*/false, "la_delta");
}

StepResult lola_delta(const PayoffTensor& game, const JointPolicy& policy,
                      double eta) {
  return anticipation_delta(game, policy, eta, /*shaped=*/true, "lola_delta");
}

StepResult hla_two_agent_delta(const PayoffTensor& game,
                               const JointPolicy& policy, double eta,
                               int leader) {
  check_two_agents(game, "hla_two_agent_delta");
  policy.validate_shape(game);
  if (leader != 0 && leader != 1) {
    throw std::invalid_argument("hla_two_agent_delta: leader must be 0 or 1");
  }
  if (!(eta > 0.0)) {
    throw std::invalid_argument("hla_two_agent_delta: eta must be > 0");
  }
  const int follower = 1 - leader;
  StepResult result;
  result.deltas.resize(2);

  // Leader: shape the follower's anticipated naive step.
  const DualBlocks base = to_dual(policy.blocks);
  const DualBlock grad_leader = gradient_block_scope(
      [&](const DualBlock& bl) {
        DualBlocks b = base;
        b[leader] = bl;
        b[follower] =
            anticipated_block(game, policy.mode, b, follower, eta, true);
        return eval(game, policy.mode, b);
      },
      base[leader]);
  result.deltas[leader] = primals(grad_leader, "hla_two_agent_delta");
  for (double& d : result.deltas[leader]) d *= eta;

  // Follower: move toward the leader's planned parameters, which are a
  // constant from its point of view.
  DualBlock planned(policy.blocks[leader].size());
  for (std::size_t c = 0; c < planned.size(); ++c) {
    planned[c] = stop_gradient(
        DualScalar(policy.blocks[leader][c] + result.deltas[leader][c]));
  }
  result.deltas[follower] = gradient_block(
      [&](const DualBlock& bf) {
        DualBlocks b = to_dual(policy.blocks);
        b[follower] = bf;
        b[leader] = planned;
        return eval(game, policy.mode, b);
      },
      policy.blocks[follower]);
  for (double& d : result.deltas[follower]) d *= eta;

  check_finite(result, "hla_two_agent_delta");
  return result;
}

namespace {

// Levels are 0-based, level 0 lowest. `planned` holds the frozen parameters
// of levels above `i` (set by earlier, higher outer iterations).
struct HlaSweep {
  const PayoffTensor& game;
  PolicyMode mode;
  double eta;
  std::vector<DualBlock> planned;

  // Delta of level j within the outer iteration for level i, evaluated at
  // `env`. Deltas of levels below j are recomputed inside the scope so that
  // the derivative flows through them; levels in (j, i] enter at their
  // current parameters and levels above i at their planned ones.
  DualBlock level_delta(int j, int i, const DualBlocks& env) const {
    const int n = game.num_agents();
    DualBlock out(env[j].size());
    for (std::size_t c = 0; c < env[j].size(); ++c) {
      const Tag tag = DualScalar::fresh_tag();
      DualBlocks env2 = env;
      env2[j][c] = env[j][c].seeded(tag);
      DualBlocks args(n);
      for (int l = 0; l < j; ++l) {
        const DualBlock dl = level_delta(l, i, env2);
        args[l].resize(env2[l].size());
        for (std::size_t d = 0; d < dl.size(); ++d) {
          args[l][d] = env2[l][d] + dl[d];
        }
      }
      for (int l = j; l <= i; ++l) args[l] = env2[l];
      for (int l = i + 1; l < n; ++l) args[l] = planned[l];
      out[c] = DualScalar(eta) * eval(game, mode, args).tangent(tag);
    }
    return out;
  }
};

}  // namespace

namespace {

void check_hierarchy(const std::vector<int>& hierarchy, int n) {
  std::vector<int> sorted = hierarchy;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(sorted.size()) != n || sorted[i] != i) {
      throw std::invalid_argument("hla: hierarchy must be a permutation");
    }
  }
}

// Runs the top-down sweep until the outer iteration `stop_level` is about to
// start: planned parameters are filled for all levels above it.
struct HlaDriver {
  PayoffTensor level_game;
  std::vector<std::vector<double>> level_blocks;
  HlaSweep sweep;
  DualBlocks env0;
  std::vector<std::vector<double>> level_deltas;

  HlaDriver(const PayoffTensor& game, const JointPolicy& policy, double eta,
            const std::vector<int>& hierarchy)
      : level_game(game.permute_agents(hierarchy)),
        level_blocks(game.num_agents()),
        sweep{level_game, policy.mode, eta,
              std::vector<DualBlock>(game.num_agents())},
        level_deltas(game.num_agents()) {
    const int n = game.num_agents();
    for (int l = 0; l < n; ++l) level_blocks[l] = policy.blocks[hierarchy[l]];
    env0 = to_dual(level_blocks);
  }

  void run_down_to(int stop_level) {
    const int n = level_game.num_agents();
    for (int i = n - 1; i >= stop_level; --i) {
      level_deltas[i] = primals(sweep.level_delta(i, i, env0), "hla_delta");
      sweep.planned[i].resize(level_blocks[i].size());
      for (std::size_t c = 0; c < level_blocks[i].size(); ++c) {
        sweep.planned[i][c] = stop_gradient(
            DualScalar(level_blocks[i][c] + level_deltas[i][c]));
      }
    }
  }
};

}  // namespace

StepResult hla_delta(const PayoffTensor& game, const JointPolicy& policy,
                     double eta, const std::vector<int>& hierarchy) {
  policy.validate_shape(game);
  const int n = game.num_agents();
  if (!(eta > 0.0)) {
    throw std::invalid_argument("hla_delta: eta must be > 0");
  }
  check_hierarchy(hierarchy, n);

  // Rename agents by level, sweep levels top-down, map deltas back.
  HlaDriver driver(game, policy, eta, hierarchy);
  driver.run_down_to(0);

  StepResult result;
  result.deltas.resize(n);
  for (int l = 0; l < n; ++l) {
    result.deltas[hierarchy[l]] = std::move(driver.level_deltas[l]);
  }
  check_finite(result, "hla_delta");
  return result;
}

std::vector<double> hla_level_delta(const PayoffTensor& game,
                                    const JointPolicy& policy, double eta,
                                    const std::vector<int>& hierarchy,
                                    int level, int outer_level) {
  policy.validate_shape(game);
  const int n = game.num_agents();
  if (!(eta > 0.0)) {
    throw std::invalid_argument("hla_level_delta: eta must be > 0");
  }
  check_hierarchy(hierarchy, n);
  if (level < 0 || outer_level >= n || level > outer_level) {
    throw std::invalid_argument("hla_level_delta: need 0 <= level <= outer");
  }
  HlaDriver driver(game, policy, eta, hierarchy);
  driver.run_down_to(outer_level + 1);
  return primals(driver.sweep.level_delta(level, outer_level, driver.env0),
                 "hla_level_delta");
}

StepResult rule_delta(const PayoffTensor& game, const JointPolicy& policy,
                      const UpdateRule& rule) {
  switch (rule.kind) {
    case RuleKind::kNaive:
      return naive_delta(game, policy, rule.eta);
    case RuleKind::kLookAhead:
      return la_delta(game, policy, rule.eta);
    case RuleKind::kLola:
      return lola_delta(game, policy, rule.eta);
    case RuleKind::kHla: {
      std::vector<int> hierarchy = rule.hierarchy;
      if (hierarchy.empty()) {
        hierarchy.resize(game.num_agents());
        for (int i = 0; i < game.num_agents(); ++i) hierarchy[i] = i;
      }
      return hla_delta(game, policy, rule.eta, hierarchy);
    }
  }
  throw std::invalid_argument("rule_delta: unknown rule");
}

}  // namespace coordlab
