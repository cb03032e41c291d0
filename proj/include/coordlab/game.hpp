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

#ifndef COORDLAB_GAME_HPP_
#define COORDLAB_GAME_HPP_

#include <cstddef>
#include <string>
#include <vector>

namespace coordlab {

/// Common reward tensor of a fully-cooperative normal-form game:
/// one real entry per joint action, shared by every agent.
class PayoffTensor {
 public:
  PayoffTensor(std::vector<int> shape, std::vector<double> entries);

  int num_agents() const { return static_cast<int>(shape_.size()); }
  int num_actions(int agent) const { return shape_[agent]; }
  const std::vector<int>& shape() const { return shape_; }
  const std::vector<double>& entries() const { return entries_; }
  double min_entry() const { return min_entry_; }
  double max_entry() const { return max_entry_; }

  /// Entry at a joint action (row-major, last agent fastest).
  double entry(const std::vector<int>& joint_action) const;

  /// Tensor with agent axes relabeled: new agent i is old agent perm[i].
  PayoffTensor permute_agents(const std::vector<int>& perm) const;

 private:
  std::vector<int> shape_;
  std::vector<double> entries_;
  double min_entry_ = 0.0;
  double max_entry_ = 0.0;
};

/// 2x2 game [[alpha, k], [k, alpha]]: coordinated actions pay alpha > 0,
/// mismatched ones pay k <= 0. Miscoordination regret g = alpha - k.
PayoffTensor two_action_game(double alpha, double k);

/// 3x3 game [[10, 0, k], [0, 2, 0], [k, 0, 10]] with regret g = 10 - k.
PayoffTensor three_action_game(double k);

enum class GameVariant { kTwoAction, kThreeAction };

struct CoordinationGameSpec {
  GameVariant variant = GameVariant::kTwoAction;
  double alpha = 1.0;  // two-action only
  double k = 0.0;

  double g() const;
  PayoffTensor tensor() const;

  static CoordinationGameSpec two_action(double alpha, double k);
  static CoordinationGameSpec three_action(double k);
  /// Builds the variant from its miscoordination regret alone
  /// (two-action: alpha = g/2, k = -g/2; three-action: k = 10 - g).
  static CoordinationGameSpec from_regret(GameVariant variant, double g);
};

/// Loads a game spec from a key=value file with keys
/// `variant` (two|three), `alpha`, `k`. Lines starting with '#' are
/// comments; unknown keys are errors.
CoordinationGameSpec load_game_spec(const std::string& path);

enum class PolicyMode { kReduced2, kSimplex };

/// Per-agent policy parameters. Reduced mode (2-action agents only) holds
/// one scalar per agent, the probability of the first action; simplex mode
/// holds a full probability vector per agent.
struct JointPolicy {
  PolicyMode mode = PolicyMode::kReduced2;
  std::vector<std::vector<double>> blocks;

  static JointPolicy reduced(std::vector<double> thetas);
  static JointPolicy simplex(std::vector<std::vector<double>> probs);

  /// Throws if shapes or mode constraints don't hold for `game`.
  void validate(const PayoffTensor& game) const;

  /// Shape/mode compatibility only; no range checks. Update rules accept
  /// out-of-range parameters (their rate fields are polynomials and the
  /// unconstrained dynamics extend beyond the box).
  void validate_shape(const PayoffTensor& game) const;
};

/// Expands parameter blocks into per-action probabilities. In reduced mode
/// a scalar t becomes (t, 1-t); in simplex mode blocks pass through.
template <class S>
std::vector<std::vector<S>> action_probabilities(
    PolicyMode mode, const std::vector<std::vector<S>>& blocks) {
  if (mode == PolicyMode::kSimplex) return blocks;
  std::vector<std::vector<S>> probs(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    probs[i] = {blocks[i][0], S(1.0) - blocks[i][0]};
  }
  return probs;
}

/// Expected common reward: the multilinear contraction
/// sum_a R[a] * prod_i P_i(a_i), over any scalar algebra with +,*.
template <class S>
S expected_value(const PayoffTensor& game,
                 const std::vector<std::vector<S>>& action_probs) {
  const std::vector<int>& shape = game.shape();
  const int n = game.num_agents();
  // Contract the last axis against plain entries first, then fold the
  // remaining axes.
  const std::vector<double>& entries = game.entries();
  const int m_last = shape[n - 1];
  std::vector<S> cur(entries.size() / m_last, S(0.0));
  for (std::size_t p = 0; p < cur.size(); ++p) {
    S acc = action_probs[n - 1][0] * entries[p * m_last];
    for (int j = 1; j < m_last; ++j) {
      acc += action_probs[n - 1][j] * entries[p * m_last + j];
    }
    cur[p] = std::move(acc);
  }
  for (int agent = n - 2; agent >= 0; --agent) {
    const int m = shape[agent];
    std::vector<S> next(cur.size() / m, S(0.0));
    for (std::size_t p = 0; p < next.size(); ++p) {
      S acc = action_probs[agent][0] * cur[p * m];
      for (int j = 1; j < m; ++j) acc += action_probs[agent][j] * cur[p * m + j];
      next[p] = std::move(acc);
    }
    cur = std::move(next);
  }
  return cur[0];
}

template <class S>
S value_of_blocks(const PayoffTensor& game, PolicyMode mode,
                  const std::vector<std::vector<S>>& blocks) {
  return expected_value(game, action_probabilities(mode, blocks));
}

/// Common value of the game under a joint policy.
double value(const PayoffTensor& game, const JointPolicy& policy);

}  // namespace coordlab

#endif  // COORDLAB_GAME_HPP_
