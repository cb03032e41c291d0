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

#include "coordlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace coordlab {

namespace {

double regret_of(const PayoffTensor& game) {
  if (game.num_agents() != 2 || game.num_actions(0) != 2 ||
      game.num_actions(1) != 2) {
    throw std::invalid_argument("expected a 2-agent 2-action game");
  }
  return game.entries()[0] - game.entries()[1];  // alpha - k
}

double canonical_unit(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace

LinearDynamics closed_form_dynamics(RuleKind rule, double g, double eta) {
  if (!(g > 0.0)) {
    throw std::invalid_argument("closed_form_dynamics: g must be > 0");
  }
  if (rule != RuleKind::kNaive && !(eta > 0.0)) {
    throw std::invalid_argument("closed_form_dynamics: eta must be > 0");
  }
  const double g2 = g * g;
  LinearDynamics dyn;
  switch (rule) {
    case RuleKind::kNaive:
      dyn.A = {{{0.0, 2.0 * g}, {2.0 * g, 0.0}}};
      dyn.b = {g, g};
      return dyn;
    case RuleKind::kLookAhead:
      dyn.A = {{{4.0 * eta * g2, 2.0 * g}, {2.0 * g, 4.0 * eta * g2}}};
      dyn.b = {2.0 * eta * g2 + g, 2.0 * eta * g2 + g};
      return dyn;
    case RuleKind::kLola:
      dyn.A = {{{8.0 * eta * g2, 2.0 * g}, {2.0 * g, 8.0 * eta * g2}}};
      dyn.b = {4.0 * eta * g2 + g, 4.0 * eta * g2 + g};
      return dyn;
    case RuleKind::kHla: {
      // Follower (agent 0) tracks the leader's planned parameters; its
      // offset must cancel at (0.5, 0.5): g + 2*eta*g^2 + 8*eta^2*g^3.
      const double g3 = g2 * g;
      dyn.A = {{{4.0 * eta * g2, 2.0 * g + 16.0 * eta * eta * g3},
                {2.0 * g, 8.0 * eta * g2}}};
      dyn.b = {8.0 * eta * eta * g3 + 2.0 * eta * g2 + g, 4.0 * eta * g2 + g};
      return dyn;
    }
  }
  throw std::invalid_argument("closed_form_dynamics: unsupported rule");
}

double verify_dynamics(RuleKind rule, const PayoffTensor& game, double eta,
                       int samples) {
  const double g = regret_of(game);
  const LinearDynamics dyn = closed_form_dynamics(rule, g, eta);
  UpdateRule r;
  r.kind = rule;
  r.eta = eta;
  if (rule == RuleKind::kHla) r.hierarchy = {0, 1};
  std::mt19937_64 eng(0x5eedul);
  double max_residual = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double t1 = canonical_unit(eng);
    const double t2 = canonical_unit(eng);
    const StepResult step =
        rule_delta(game, JointPolicy::reduced({t1, t2}), r);
    for (int i = 0; i < 2; ++i) {
      const double rate = step.deltas[i][0] / r.eta;
      const double predicted =
          dyn.A[i][0] * t1 + dyn.A[i][1] * t2 - dyn.b[i];
      max_residual = std::max(max_residual, std::abs(rate - predicted));
    }
  }
  return max_residual;
}

std::optional<std::array<double, 2>> fixed_point(const LinearDynamics& dyn) {
  const auto& A = dyn.A;
  const double det = A[0][0] * A[1][1] - A[0][1] * A[1][0];
  double scale = 0.0;
  for (const auto& row : A) {
    for (double v : row) scale = std::max(scale, std::abs(v));
  }
  if (std::abs(det) <= 1e-12 * std::max(1.0, scale * scale)) {
    return std::nullopt;
  }
  return std::array<double, 2>{
      (dyn.b[0] * A[1][1] - dyn.b[1] * A[0][1]) / det,
      (dyn.b[1] * A[0][0] - dyn.b[0] * A[1][0]) / det};
}

std::string to_string(FixedPointClass cls) {
  switch (cls) {
    case FixedPointClass::kSaddle: return "saddle";
    case FixedPointClass::kSource: return "source";
    case FixedPointClass::kSink: return "sink";
    case FixedPointClass::kUnstableLine: return "unstable-line";
    case FixedPointClass::kStableLine: return "stable-line";
    case FixedPointClass::kCenter: return "center";
    case FixedPointClass::kSpiralSource: return "spiral-source";
    case FixedPointClass::kSpiralSink: return "spiral-sink";
    case FixedPointClass::kDegenerate: return "degenerate";
  }
  return "?";
}

FixedPointReport classify(const LinearDynamics& dyn) {
  FixedPointReport report;
  const auto& A = dyn.A;
  const double tr = A[0][0] + A[1][1];
  const double det = A[0][0] * A[1][1] - A[0][1] * A[1][0];
  const double disc = tr * tr - 4.0 * det;
  double scale = 0.0;
  for (const auto& row : A) {
    for (double v : row) scale = std::max(scale, std::abs(v));
  }
  const double eps = 1e-10 * std::max(1.0, scale);

  if (const auto fp = fixed_point(dyn)) {
    report.location = *fp;
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    report.location = {nan, nan};
  }

  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    const double l1 = (tr + s) / 2.0;
    const double l2 = (tr - s) / 2.0;
    report.eigenvalues = {std::complex<double>(l1, 0.0),
                          std::complex<double>(l2, 0.0)};
    if (l1 > eps && l2 < -eps) {
      report.cls = FixedPointClass::kSaddle;
    } else if (l1 > eps && l2 > eps) {
      report.cls = FixedPointClass::kSource;
    } else if (l1 < -eps && l2 < -eps) {
      report.cls = FixedPointClass::kSink;
    } else if (l1 > eps) {
      report.cls = FixedPointClass::kUnstableLine;
    } else if (l2 < -eps) {
      report.cls = FixedPointClass::kStableLine;
    } else {
      report.cls = FixedPointClass::kDegenerate;
    }
  } else {
    const double re = tr / 2.0;
    const double im = std::sqrt(-disc) / 2.0;
    report.eigenvalues = {std::complex<double>(re, im),
                          std::complex<double>(re, -im)};
    if (re > eps) {
      report.cls = FixedPointClass::kSpiralSource;
    } else if (re < -eps) {
      report.cls = FixedPointClass::kSpiralSink;
    } else {
      report.cls = FixedPointClass::kCenter;
    }
  }
  return report;
}

Trajectory integrate_phase(const PayoffTensor& game, const UpdateRule& rule,
                           std::array<double, 2> theta0, double step,
                           double horizon, bool constrained) {
  regret_of(game);  // shape check
  if (!(step > 0.0) || !(horizon > 0.0)) {
    throw std::invalid_argument("integrate_phase: step and horizon must be > 0");
  }
  const auto rate = [&](const std::array<double, 2>& th) {
    const StepResult d = rule_delta(game, JointPolicy::reduced({th[0], th[1]}),
                                    rule);
    return std::array<double, 2>{d.deltas[0][0] / rule.eta,
                                 d.deltas[1][0] / rule.eta};
  };
  Trajectory traj;
  std::array<double, 2> th = theta0;
  double t = 0.0;
  traj.points.push_back({t, th[0], th[1]});
  const long steps = static_cast<long>(std::ceil(horizon / step));
  for (long s = 0; s < steps; ++s) {
    const auto k1 = rate(th);
    const std::array<double, 2> p2{th[0] + 0.5 * step * k1[0],
                                   th[1] + 0.5 * step * k1[1]};
    const auto k2 = rate(p2);
    const std::array<double, 2> p3{th[0] + 0.5 * step * k2[0],
                                   th[1] + 0.5 * step * k2[1]};
    const auto k3 = rate(p3);
    const std::array<double, 2> p4{th[0] + step * k3[0], th[1] + step * k3[1]};
    const auto k4 = rate(p4);
    for (int i = 0; i < 2; ++i) {
      th[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (constrained) th[i] = std::clamp(th[i], 0.0, 1.0);
    }
    t += step;
    traj.points.push_back({t, th[0], th[1]});
    if (std::max(std::abs(th[0]), std::abs(th[1])) > 1e6) {
      traj.diverged = true;
      break;
    }
  }
  return traj;
}

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kGlobalEquilibrium: return "global-equilibrium";
    case Outcome::kLocalEquilibrium: return "local-equilibrium";
    case Outcome::kMiscoordination: return "miscoordination";
    case Outcome::kOther: return "other";
  }
  return "?";
}

std::optional<Outcome> outcome_from_string(const std::string& name) {
  if (name == "global-equilibrium") return Outcome::kGlobalEquilibrium;
  if (name == "local-equilibrium") return Outcome::kLocalEquilibrium;
  if (name == "miscoordination") return Outcome::kMiscoordination;
  if (name == "other") return Outcome::kOther;
  return std::nullopt;
}

namespace {

// Enumerates joint actions of the tensor in row-major order.
class JointActionIterator {
 public:
  explicit JointActionIterator(const std::vector<int>& shape)
      : shape_(shape), joint_(shape.size(), 0) {}
  const std::vector<int>& joint() const { return joint_; }
  bool next() {
    for (int i = static_cast<int>(joint_.size()) - 1; i >= 0; --i) {
      if (++joint_[i] < shape_[i]) return true;
      joint_[i] = 0;
    }
    return false;
  }

 private:
  const std::vector<int>& shape_;
  std::vector<int> joint_;
};

bool is_equilibrium(const PayoffTensor& game, const std::vector<int>& joint) {
  const double v = game.entry(joint);
  std::vector<int> dev = joint;
  for (int i = 0; i < game.num_agents(); ++i) {
    for (int a = 0; a < game.num_actions(i); ++a) {
      if (a == joint[i]) continue;
      dev[i] = a;
      if (game.entry(dev) > v) return false;
    }
    dev[i] = joint[i];
  }
  return true;
}

Outcome classify_vertex(const PayoffTensor& game,
                        const std::vector<int>& joint) {
  const int n = game.num_agents();
  std::vector<std::vector<int>> global_actions(n);
  JointActionIterator it(game.shape());
  do {
    if (game.entry(it.joint()) == game.max_entry() &&
        is_equilibrium(game, it.joint())) {
      for (int i = 0; i < n; ++i) global_actions[i].push_back(it.joint()[i]);
    }
  } while (it.next());

  if (game.entry(joint) == game.max_entry() && is_equilibrium(game, joint)) {
    return Outcome::kGlobalEquilibrium;
  }
  if (is_equilibrium(game, joint)) return Outcome::kLocalEquilibrium;
  for (int i = 0; i < n; ++i) {
    const auto& acts = global_actions[i];
    if (std::find(acts.begin(), acts.end(), joint[i]) == acts.end()) {
      return Outcome::kOther;
    }
  }
  return Outcome::kMiscoordination;
}

}  // namespace

OutcomeReport classify_outcome(const PayoffTensor& game,
                               const JointPolicy& policy, double tol) {
  policy.validate(game);
  OutcomeReport report;
  report.value = value(game, policy);
  const auto probs = action_probabilities(policy.mode, policy.blocks);
  std::vector<int> vertex(game.num_agents());
  for (int i = 0; i < game.num_agents(); ++i) {
    const auto& p = probs[i];
    const auto best = std::max_element(p.begin(), p.end());
    if (!(*best > 1.0 - tol)) {
      report.outcome = Outcome::kOther;
      return report;
    }
    vertex[i] = static_cast<int>(best - p.begin());
  }
  report.outcome = classify_vertex(game, vertex);
  return report;
}

std::vector<double> project_to_simplex(std::vector<double> y) {
  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumsum += sorted[j];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) tau = candidate;
  }
  for (double& v : y) v = std::max(v - tau, 0.0);
  return y;
}

TrainRun train(const PayoffTensor& game, const JointPolicy& theta0,
               const UpdateRule& rule, const TrainOptions& options) {
  theta0.validate(game);
  if (!(options.lr > 0.0)) {
    throw std::invalid_argument("train: lr must be > 0");
  }
  TrainRun run;
  run.initial = theta0;
  JointPolicy theta = theta0;
  const double scale = options.lr / rule.eta;
  for (long it = 1; it <= options.max_iter; ++it) {
    const StepResult step = rule_delta(game, theta, rule);
    double displacement = 0.0;
    for (std::size_t i = 0; i < theta.blocks.size(); ++i) {
      std::vector<double>& block = theta.blocks[i];
      if (theta.mode == PolicyMode::kReduced2) {
        const double updated =
            std::clamp(block[0] + scale * step.deltas[i][0], 0.0, 1.0);
        displacement = std::max(displacement, std::abs(updated - block[0]));
        block[0] = updated;
      } else {
        std::vector<double> d(block.size());
        double mean = 0.0;
        for (std::size_t c = 0; c < block.size(); ++c) {
          d[c] = scale * step.deltas[i][c];
          mean += d[c];
        }
        mean /= static_cast<double>(block.size());
        std::vector<double> stepped(block.size());
        for (std::size_t c = 0; c < block.size(); ++c) {
          stepped[c] = block[c] + (d[c] - mean);
        }
        const std::vector<double> projected = project_to_simplex(stepped);
        for (std::size_t c = 0; c < block.size(); ++c) {
          displacement =
              std::max(displacement, std::abs(projected[c] - block[c]));
        }
        block = projected;
      }
      for (double v : block) {
        if (!std::isfinite(v)) {
          throw std::runtime_error("train: non-finite parameters at iteration " +
                                   std::to_string(it));
        }
      }
    }
    run.iterations = it;
    if (displacement < options.tol) {
      run.converged = true;
      break;
    }
  }
  run.final_policy = theta;
  const OutcomeReport report =
      classify_outcome(game, theta, options.outcome_tol);
  run.final_value = report.value;
  run.outcome = run.converged ? report.outcome : Outcome::kOther;
  return run;
}

}  // namespace coordlab
