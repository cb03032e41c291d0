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

#include "coordlab/game.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "coordlab/config.hpp"

namespace coordlab {

PayoffTensor::PayoffTensor(std::vector<int> shape, std::vector<double> entries)
    : shape_(std::move(shape)), entries_(std::move(entries)) {
  if (shape_.size() < 2) {
    throw std::invalid_argument("PayoffTensor: need at least 2 agents");
  }
  std::size_t expected = 1;
  for (int m : shape_) {
    if (m < 2) throw std::invalid_argument("PayoffTensor: need >= 2 actions per agent");
    expected *= static_cast<std::size_t>(m);
  }
  if (entries_.size() != expected) {
    throw std::invalid_argument("PayoffTensor: entry count does not match shape");
  }
  for (double e : entries_) {
    if (!std::isfinite(e)) {
      throw std::invalid_argument("PayoffTensor: entries must be finite");
    }
  }
  auto [mn, mx] = std::minmax_element(entries_.begin(), entries_.end());
  min_entry_ = *mn;
  max_entry_ = *mx;
}

double PayoffTensor::entry(const std::vector<int>& joint_action) const {
  if (joint_action.size() != shape_.size()) {
    throw std::invalid_argument("PayoffTensor::entry: wrong joint action rank");
  }
  std::size_t idx = 0;
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    const int a = joint_action[i];
    if (a < 0 || a >= shape_[i]) {
      throw std::invalid_argument("PayoffTensor::entry: action out of range");
    }
    idx = idx * static_cast<std::size_t>(shape_[i]) + static_cast<std::size_t>(a);
  }
  return entries_[idx];
}

PayoffTensor PayoffTensor::permute_agents(const std::vector<int>& perm) const {
  const int n = num_agents();
  if (static_cast<int>(perm.size()) != n) {
    throw std::invalid_argument("permute_agents: wrong permutation size");
  }
  std::vector<int> new_shape(n);
  for (int i = 0; i < n; ++i) new_shape[i] = shape_[perm[i]];
  std::size_t total = entries_.size();
  std::vector<double> new_entries(total);
  std::vector<int> joint(n), old_joint(n);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (int i = n - 1; i >= 0; --i) {
      joint[i] = static_cast<int>(rest % static_cast<std::size_t>(new_shape[i]));
      rest /= static_cast<std::size_t>(new_shape[i]);
    }
    for (int i = 0; i < n; ++i) old_joint[perm[i]] = joint[i];
    new_entries[flat] = entry(old_joint);
  }
  return PayoffTensor(std::move(new_shape), std::move(new_entries));
}

PayoffTensor two_action_game(double alpha, double k) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("two_action_game: alpha must be > 0");
  }
  if (!(k <= 0.0)) {
    throw std::invalid_argument("two_action_game: k must be <= 0");
  }
  return PayoffTensor({2, 2}, {alpha, k, k, alpha});
}

PayoffTensor three_action_game(double k) {
  if (!(k <= 10.0)) {
    throw std::invalid_argument("three_action_game: k must be <= 10");
  }
  return PayoffTensor({3, 3}, {10, 0, k, 0, 2, 0, k, 0, 10});
}

double CoordinationGameSpec::g() const {
  return variant == GameVariant::kTwoAction ? alpha - k : 10.0 - k;
}

PayoffTensor CoordinationGameSpec::tensor() const {
  return variant == GameVariant::kTwoAction ? two_action_game(alpha, k)
                                            : three_action_game(k);
}

CoordinationGameSpec CoordinationGameSpec::two_action(double alpha, double k) {
  two_action_game(alpha, k);  // validates
  return {GameVariant::kTwoAction, alpha, k};
}

CoordinationGameSpec CoordinationGameSpec::three_action(double k) {
  three_action_game(k);  // validates
  return {GameVariant::kThreeAction, 0.0, k};
}

CoordinationGameSpec CoordinationGameSpec::from_regret(GameVariant variant,
                                                       double g) {
  if (!(g > 0.0)) {
    throw std::invalid_argument("from_regret: g must be > 0");
  }
  if (variant == GameVariant::kTwoAction) {
    return two_action(g / 2.0, -g / 2.0);
  }
  return three_action(10.0 - g);
}

CoordinationGameSpec load_game_spec(const std::string& path) {
  const KeyValueMap kv = read_key_value_file(path);
  std::string variant;
  double alpha = 1.0;
  double k = 0.0;
  bool saw_alpha = false;
  for (const auto& [key, val] : kv) {
    if (key == "variant") {
      variant = val;
    } else if (key == "alpha") {
      alpha = parse_double(val, "alpha");
      saw_alpha = true;
    } else if (key == "k") {
      k = parse_double(val, "k");
    } else {
      throw std::invalid_argument("game spec: unknown key '" + key + "'");
    }
  }
  if (variant == "two") return CoordinationGameSpec::two_action(alpha, k);
  if (variant == "three") {
    if (saw_alpha) {
      throw std::invalid_argument("game spec: alpha is not a three-action key");
    }
    return CoordinationGameSpec::three_action(k);
  }
  throw std::invalid_argument("game spec: variant must be 'two' or 'three'");
}

JointPolicy JointPolicy::reduced(std::vector<double> thetas) {
  JointPolicy p;
  p.mode = PolicyMode::kReduced2;
  p.blocks.reserve(thetas.size());
  for (double t : thetas) p.blocks.push_back({t});
  return p;
}

JointPolicy JointPolicy::simplex(std::vector<std::vector<double>> probs) {
  JointPolicy p;
  p.mode = PolicyMode::kSimplex;
  p.blocks = std::move(probs);
  return p;
}

void JointPolicy::validate_shape(const PayoffTensor& game) const {
  if (static_cast<int>(blocks.size()) != game.num_agents()) {
    throw std::invalid_argument("JointPolicy: wrong number of agents");
  }
  for (int i = 0; i < game.num_agents(); ++i) {
    if (mode == PolicyMode::kReduced2) {
      if (game.num_actions(i) != 2) {
        throw std::invalid_argument(
            "JointPolicy: reduced mode requires 2-action agents");
      }
      if (blocks[i].size() != 1) {
        throw std::invalid_argument("JointPolicy: reduced block must be scalar");
      }
    } else if (static_cast<int>(blocks[i].size()) != game.num_actions(i)) {
      throw std::invalid_argument("JointPolicy: block length != action count");
    }
  }
}

void JointPolicy::validate(const PayoffTensor& game) const {
  constexpr double kSimplexTol = 1e-12;
  validate_shape(game);
  for (int i = 0; i < game.num_agents(); ++i) {
    if (mode == PolicyMode::kReduced2) {
      const double t = blocks[i][0];
      if (!(t >= 0.0 && t <= 1.0)) {
        throw std::invalid_argument("JointPolicy: theta outside [0,1]");
      }
    } else {
      double sum = 0.0;
      for (double p : blocks[i]) {
        if (p < -kSimplexTol) {
          throw std::invalid_argument("JointPolicy: negative probability");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kSimplexTol) {
        throw std::invalid_argument("JointPolicy: probabilities must sum to 1");
      }
    }
  }
}

double value(const PayoffTensor& game, const JointPolicy& policy) {
  policy.validate(game);
  return value_of_blocks(game, policy.mode, policy.blocks);
}

}  // namespace coordlab
