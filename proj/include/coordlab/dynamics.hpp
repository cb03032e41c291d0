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

#ifndef COORDLAB_DYNAMICS_HPP_
#define COORDLAB_DYNAMICS_HPP_

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "coordlab/game.hpp"
#include "coordlab/learners.hpp"

namespace coordlab {

/// Unconstrained planar linear system d(theta)/dt = A*theta - b.
struct LinearDynamics {
  std::array<std::array<double, 2>, 2> A{};
  std::array<double, 2> b{};
};

/// Analytic per-unit-time dynamics of a rule on the two-action game with
/// regret g. For HLA, agent 0 is the follower and agent 1 the leader, and
/// the offset is the one that vanishes at (0.5, 0.5).
LinearDynamics closed_form_dynamics(RuleKind rule, double g, double eta);

/// Max over sampled policies of |learner rate - (A*theta - b)|, where the
/// rate is the rule delta divided by eta. Two-action reduced games only.
double verify_dynamics(RuleKind rule, const PayoffTensor& game, double eta,
                       int samples);

/// Solves A*theta = b; nullopt when A is singular (a line of fixed points).
std::optional<std::array<double, 2>> fixed_point(const LinearDynamics& dyn);

enum class FixedPointClass {
  kSaddle,
  kSource,
  kSink,
  kUnstableLine,
  kStableLine,
  kCenter,
  kSpiralSource,
  kSpiralSink,
  kDegenerate,
};

std::string to_string(FixedPointClass cls);

struct FixedPointReport {
  std::array<double, 2> location{};  // NaN when A is singular
  std::array<std::complex<double>, 2> eigenvalues{};
  FixedPointClass cls = FixedPointClass::kDegenerate;
};

/// Eigenvalues of A and the standard planar classification. Saddle iff the
/// eigenvalues are real with strictly opposite signs.
FixedPointReport classify(const LinearDynamics& dyn);

struct Trajectory {
  std::vector<std::array<double, 3>> points;  // (t, theta1, theta2)
  bool diverged = false;
};

/// Classical fixed-step 4th-order integration of the rule's rate field on a
/// two-action reduced game. With `constrained`, iterates are clipped to
/// [0,1]^2 after each step; unconstrained trajectories abort (diverged flag)
/// past max-norm 1e6.
Trajectory integrate_phase(const PayoffTensor& game, const UpdateRule& rule,
                           std::array<double, 2> theta0, double step,
                           double horizon, bool constrained);

enum class Outcome {
  kGlobalEquilibrium,
  kLocalEquilibrium,
  kMiscoordination,
  kOther,
};

std::string to_string(Outcome outcome);
std::optional<Outcome> outcome_from_string(const std::string& name);

struct OutcomeReport {
  Outcome outcome = Outcome::kOther;
  double value = 0.0;  // exact common value at the final policy
};

/// Maps a policy to the nearest pure joint profile (every agent's max
/// probability above 1 - tol) and classifies it from the tensor: equilibria
/// attaining the tensor max are global, other equilibria local; a
/// non-equilibrium vertex whose actions all occur in global equilibria is a
/// miscoordination; anything else (including interior policies) is `other`.
OutcomeReport classify_outcome(const PayoffTensor& game,
                               const JointPolicy& policy, double tol);

struct TrainOptions {
  double lr = 0.05;
  long max_iter = 200000;
  double tol = 1e-8;          // max-norm of the effective per-iteration update
  double outcome_tol = 1e-3;  // nearest-vertex classification
};

struct TrainRun {
  JointPolicy initial;
  JointPolicy final_policy;
  long iterations = 0;
  bool converged = false;
  Outcome outcome = Outcome::kOther;
  double final_value = 0.0;
};

/// Iterates delta -> scaled update (lambda/eta) -> constraint projection
/// until the post-projection parameter change drops below tol. Reduced mode
/// clips to [0,1]; simplex mode projects the update onto the sum-zero
/// tangent space, steps, then projects back onto the simplex.
/// Non-converged runs are classified `other`.
TrainRun train(const PayoffTensor& game, const JointPolicy& theta0,
               const UpdateRule& rule, const TrainOptions& options);

/// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(std::vector<double> y);

}  // namespace coordlab

#endif  // COORDLAB_DYNAMICS_HPP_
