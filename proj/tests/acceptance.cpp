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

// End-to-end acceptance suite. Each criterion prints one pass/fail line;
// the exit status is the number of failures.

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "coordlab/cli.hpp"
#include "coordlab/dual.hpp"
#include "coordlab/dynamics.hpp"
#include "coordlab/experiments.hpp"
#include "coordlab/game.hpp"
#include "coordlab/learners.hpp"
#include "oracles.hpp"

using namespace coordlab;
using namespace coordlab::testing;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool condition, const std::string& message) {
    if (!condition) {
      if (!ok) detail << "; ";
      ok = false;
      detail << message;
    }
  }
};

int g_failures = 0;

void criterion(int id, const std::string& name,
               const std::function<void(Check&)>& body) {
  Check check;
  try {
    body(check);
  } catch (const std::exception& e) {
    check.expect(false, std::string("exception: ") + e.what());
  }
  if (check.ok) {
    std::cout << "[PASS] criterion " << id << ": " << name << "\n";
  } else {
    ++g_failures;
    std::cout << "[FAIL] criterion " << id << ": " << name << " ("
              << check.detail.str() << ")\n";
  }
  std::cout.flush();
}

std::string fmt(double v) { return format_double(v); }

// --------------------------------------------------------------------------
// Criteria 1-2: LA and LOLA stability thresholds with eigenvalue formulas.

void threshold_criterion(Check& check, RuleKind rule, double denom_factor,
                         double diag_factor) {
  for (double eta : {0.25, 0.5, 1.0, 2.0}) {
    const double threshold = 1.0 / (denom_factor * eta);
    for (double offset : {1e-3, 0.1, 0.5}) {
      for (double side : {-1.0, 1.0}) {
        const double g = threshold + side * offset;
        if (!(g > 0.0)) continue;  // not a valid game
        const FixedPointReport report =
            classify(closed_form_dynamics(rule, g, eta));
        const FixedPointClass want = side < 0.0 ? FixedPointClass::kSaddle
                                                : FixedPointClass::kSource;
        check.expect(report.cls == want,
                     "eta=" + fmt(eta) + " g=" + fmt(g) + " class " +
                         to_string(report.cls));
        const double l1 = diag_factor * eta * g * g + 2.0 * g;
        const double l2 = diag_factor * eta * g * g - 2.0 * g;
        check.expect(std::abs(report.eigenvalues[0].real() - l1) < 1e-9 &&
                         std::abs(report.eigenvalues[1].real() - l2) < 1e-9,
                     "eigenvalues off at eta=" + fmt(eta) + " g=" + fmt(g));
      }
    }
  }
}

// --------------------------------------------------------------------------
// Criterion 11 oracle: the hierarchical sweep re-derived with plain central
// finite differences over a hand-written three-agent value polynomial.

struct FdSweep {
  std::array<std::array<std::array<double, 2>, 2>, 2> r{};
  double eta = 0.0;
  std::array<double, 3> planned{};
  int planned_above = 3;  // planned[l] valid for l >= planned_above

  double value(const std::array<double, 3>& t) const {
    double v = 0.0;
    for (int a = 0; a < 2; ++a) {
      const double pa = a == 0 ? t[0] : 1.0 - t[0];
      for (int b = 0; b < 2; ++b) {
        const double pb = b == 0 ? t[1] : 1.0 - t[1];
        for (int c = 0; c < 2; ++c) {
          const double pc = c == 0 ? t[2] : 1.0 - t[2];
          v += r[a][b][c] * pa * pb * pc;
        }
      }
    }
    return v;
  }

  // Richardson-extrapolated central difference. The branches nest up to
  // three differentiations; roundoff in plain nested differences grows like
  // eps/h^3, so the oracle runs at a larger base step where extrapolated
  // truncation is negligible and the noise floor sits near 1e-9 relative.
  template <class F>
  static double rdiff(F&& f, double x) {
    const double h = 3e-3;
    const double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    const double d2 = (f(x + h / 2) - f(x - h / 2)) / h;
    return (4.0 * d2 - d1) / 3.0;
  }

  double level_delta(int j, int i, std::array<double, 3> env) const {
    const auto composed = [&](double tj) {
      std::array<double, 3> env2 = env;
      env2[j] = tj;
      std::array<double, 3> args{};
      for (int l = 0; l < j; ++l) args[l] = env2[l] + level_delta(l, i, env2);
      args[j] = env2[j];
      for (int l = j + 1; l <= i; ++l) args[l] = env2[l];
      for (int l = i + 1; l < 3; ++l) args[l] = planned[l];
      return value(args);
    };
    return eta * rdiff(composed, env[j]);
  }

  // Fills planned parameters down to (and excluding) outer level `stop`.
  void run_down_to(int stop, const std::array<double, 3>& theta) {
    planned_above = 3;
    for (int i = 2; i >= stop; --i) {
      planned[i] = theta[i] + level_delta(i, i, theta);
      planned_above = i;
    }
  }
};

// --------------------------------------------------------------------------

const char* kResultsDir = "acceptance_out";

}  // namespace

int main() {
  std::cout << "acceptance suite (tolerances pinned in code)\n";

  criterion(1, "LA saddle/source flip at g = 1/(2 eta)", [](Check& check) {
    threshold_criterion(check, RuleKind::kLookAhead, 2.0, 4.0);
  });

  criterion(2, "LOLA saddle/source flip at g = 1/(4 eta)", [](Check& check) {
    threshold_criterion(check, RuleKind::kLola, 4.0, 8.0);
  });

  criterion(3, "naive eigenvalues are exactly +-2g, always a saddle",
            [](Check& check) {
              std::mt19937_64 eng(301);
              for (int s = 0; s < 20; ++s) {
                const double g = 50.0 * (0.001 + 0.999 * unit(eng));
                const FixedPointReport r =
                    classify(closed_form_dynamics(RuleKind::kNaive, g, 1.0));
                check.expect(
                    std::abs(r.eigenvalues[0].real() - 2.0 * g) < 1e-12 &&
                        std::abs(r.eigenvalues[1].real() + 2.0 * g) < 1e-12,
                    "eigenvalues off at g=" + fmt(g));
                check.expect(r.cls == FixedPointClass::kSaddle,
                             "class at g=" + fmt(g));
              }
            });

  criterion(4, "HLA det=-4g^2, trace=12 eta g^2, saddle, eigenvalue formula",
            [](Check& check) {
              for (int i = 1; i <= 10; ++i) {
                for (int j = 1; j <= 10; ++j) {
                  const double g = 0.1 + i * (10.0 - 0.1) / 10.0;
                  const double eta = 0.1 + j * (2.0 - 0.1) / 10.0;
                  const LinearDynamics dyn =
                      closed_form_dynamics(RuleKind::kHla, g, eta);
                  const double det =
                      dyn.A[0][0] * dyn.A[1][1] - dyn.A[0][1] * dyn.A[1][0];
                  const double tr = dyn.A[0][0] + dyn.A[1][1];
                  check.expect(std::abs(det + 4.0 * g * g) < 1e-9,
                               "det at g=" + fmt(g) + " eta=" + fmt(eta));
                  check.expect(std::abs(tr - 12.0 * eta * g * g) < 1e-9,
                               "trace at g=" + fmt(g) + " eta=" + fmt(eta));
                  const FixedPointReport r = classify(dyn);
                  check.expect(r.cls == FixedPointClass::kSaddle,
                               "class at g=" + fmt(g) + " eta=" + fmt(eta));
                  const double root =
                      2.0 * g * std::sqrt(9.0 * eta * eta * g * g + 1.0);
                  check.expect(
                      std::abs(r.eigenvalues[0].real() -
                               (6.0 * eta * g * g + root)) < 1e-9 &&
                          std::abs(r.eigenvalues[1].real() -
                                   (6.0 * eta * g * g - root)) < 1e-9,
                      "eigenvalues at g=" + fmt(g) + " eta=" + fmt(eta));
                }
              }
            });

  criterion(5, "A theta = b is solved by (0.5, 0.5) for every rule",
            [](Check& check) {
              std::mt19937_64 eng(305);
              for (RuleKind rule :
                   {RuleKind::kNaive, RuleKind::kLookAhead, RuleKind::kLola,
                    RuleKind::kHla}) {
                for (int s = 0; s < 20; ++s) {
                  const double g = 0.1 + 9.9 * unit(eng);
                  const double eta = 0.1 + 1.9 * unit(eng);
                  const auto fp =
                      fixed_point(closed_form_dynamics(rule, g, eta));
                  check.expect(fp.has_value(), "singular at g=" + fmt(g));
                  if (fp) {
                    check.expect(std::abs((*fp)[0] - 0.5) < 1e-9 &&
                                     std::abs((*fp)[1] - 0.5) < 1e-9,
                                 to_string(rule) + " fixed point off at g=" +
                                     fmt(g) + " eta=" + fmt(eta));
                  }
                }
              }
            });

  criterion(6, "learner rates match the closed forms to 1e-9",
            [](Check& check) {
              std::mt19937_64 eng(306);
              for (RuleKind rule :
                   {RuleKind::kNaive, RuleKind::kLookAhead, RuleKind::kLola,
                    RuleKind::kHla}) {
                for (int pair = 0; pair < 5; ++pair) {
                  const double g = 0.1 + 9.9 * unit(eng);
                  const double eta = 0.1 + 1.9 * unit(eng);
                  const PayoffTensor game = two_action_game(g / 2, -g / 2);
                  const double residual =
                      verify_dynamics(rule, game, eta, 100);
                  check.expect(residual < 1e-9,
                               to_string(rule) + " residual " +
                                   fmt(residual) + " at g=" + fmt(g) +
                                   " eta=" + fmt(eta));
                }
              }
            });

  criterion(
      7, "dual derivatives match finite differences on random games",
      [](Check& check) {
        std::mt19937_64 eng(307);
        for (int trial = 0; trial < 50; ++trial) {
          const int n = 2 + static_cast<int>(eng() % 2);
          std::vector<int> actions(n);
          for (int& a : actions) a = 2 + static_cast<int>(eng() % 2);
          const PayoffTensor game = random_tensor(eng, n, actions);
          const JointPolicy policy =
              random_policy(eng, game, PolicyMode::kSimplex);

          for (int i = 0; i < n; ++i) {
            for (int c = 0; c < actions[i]; ++c) {
              const double got = gradient_block(
                  [&](const std::vector<DualScalar>& bi) {
                    std::vector<std::vector<DualScalar>> blocks(n);
                    for (int a = 0; a < n; ++a) {
                      blocks[a].assign(policy.blocks[a].begin(),
                                       policy.blocks[a].end());
                    }
                    blocks[i] = bi;
                    return value_of_blocks(game, PolicyMode::kSimplex, blocks);
                  },
                  policy.blocks[i])[c];
              const double want =
                  central_diff(value_slice(game, policy, i, c),
                               policy.blocks[i][c]);
              check.expect(close_rel(got, want),
                           "dV trial " + std::to_string(trial));
            }
          }
          // One random second derivative per trial.
          const int i = static_cast<int>(eng() % n);
          const int j = (i + 1) % n;
          const int c = static_cast<int>(eng() % actions[i]);
          const int d = static_cast<int>(eng() % actions[j]);
          const double got2 = derivative(
              [&](const DualScalar& x) {
                return derivative_scope(
                    [&](const DualScalar& y) {
                      std::vector<std::vector<DualScalar>> blocks(n);
                      for (int a = 0; a < n; ++a) {
                        blocks[a].assign(policy.blocks[a].begin(),
                                         policy.blocks[a].end());
                      }
                      blocks[i][c] = x;
                      blocks[j][d] = y;
                      return value_of_blocks(game, PolicyMode::kSimplex,
                                             blocks);
                    },
                    DualScalar(policy.blocks[j][d]));
              },
              policy.blocks[i][c]);
          const double want2 = central_diff(
              [&](double x) {
                JointPolicy p = policy;
                p.blocks[i][c] = x;
                return central_diff(value_slice(game, p, j, d),
                                    p.blocks[j][d]);
              },
              policy.blocks[i][c]);
          check.expect(close_rel(got2, want2),
                       "d2V trial " + std::to_string(trial));
        }
      });

  criterion(8, "two-action basin fractions (eta=1, lr=0.05, 41x41 grid)",
            [](Check& check) {
              TrainOptions opts;
              opts.lr = 0.05;
              const int res = 41;
              const auto run_map = [&](RuleKind kind, double g) {
                UpdateRule rule;
                rule.kind = kind;
                rule.eta = 1.0;
                if (kind == RuleKind::kHla) rule.hierarchy = {0, 1};
                return basin_map(two_action_game(g / 2, -g / 2), rule, opts,
                                 res, 0);
              };
              const auto check_cell = [&](RuleKind kind, double g,
                                          bool expect_zero) {
                const BasinMap map = run_map(kind, g);
                if (expect_zero) {
                  check.expect(map.miscoordination_fraction == 0.0,
                               to_string(kind) + " g=" + fmt(g) +
                                   " fraction " +
                                   fmt(map.miscoordination_fraction));
                } else {
                  check.expect(map.miscoordination_fraction > 0.0,
                               to_string(kind) + " g=" + fmt(g) +
                                   " fraction is zero");
                }
                // Runs that settled at a coordination equilibrium must
                // recover the full coordination reward alpha = g/2.
                for (const BasinPoint& p : map.points) {
                  if (p.outcome == Outcome::kGlobalEquilibrium) {
                    check.expect(std::abs(p.final_value - g / 2) <= 1e-3,
                                 to_string(kind) + " g=" + fmt(g) +
                                     " value off at (" + fmt(p.theta1) + "," +
                                     fmt(p.theta2) + ")");
                  }
                }
              };
              for (double g : {0.2, 1.0, 5.0}) {
                check_cell(RuleKind::kNaive, g, true);
                check_cell(RuleKind::kHla, g, true);
              }
              check_cell(RuleKind::kLookAhead, 0.4, true);
              check_cell(RuleKind::kLookAhead, 1.0, false);
              check_cell(RuleKind::kLola, 0.2, true);
              check_cell(RuleKind::kLola, 0.3, false);
              check_cell(RuleKind::kLola, 1.0, false);
            });

  criterion(
      9, "three-action campaign ordering (500 runs per cell)",
      [](Check& check) {
        SweepConfig cfg;  // defaults are the campaign preset
        const SweepResult result = run_sweep(cfg);
        const auto& hla = result.aggregates.at("hla");
        const auto& la = result.aggregates.at("la");
        const auto& lola = result.aggregates.at("lola");
        const auto& naive = result.aggregates.at("naive");

        for (const auto& [g, cell] : hla) {
          check.expect(cell.frac_global >= 0.99,
                       "hla frac_global " + fmt(cell.frac_global) + " at g=" +
                           fmt(g));
          check.expect(cell.mean_value >= 9.8,
                       "hla mean " + fmt(cell.mean_value) + " at g=" + fmt(g));
        }

        for (const auto* cells : {&la, &lola}) {
          double prev = -1.0;
          for (const auto& [g, cell] : *cells) {
            check.expect(cell.frac_miscoord >= prev - 0.02,
                         "miscoordination fraction decreased at g=" + fmt(g));
            prev = cell.frac_miscoord;
          }
          check.expect(cells->at(50.0).frac_miscoord > 0.0,
                       "no miscoordination at g=50");
        }

        double prev_local = -1.0;
        for (const auto& [g, cell] : naive) {
          check.expect(cell.frac_local >= prev_local,
                       "naive frac_local decreased at g=" + fmt(g));
          prev_local = cell.frac_local;
        }
        check.expect(naive.at(50.0).mean_value < hla.at(50.0).mean_value,
                     "naive mean not below hla at g=50");
      });

  criterion(10, "fig2 --runs 50 --seed 1 is byte-reproducible",
            [](Check& check) {
              const fs::path base = fs::path(kResultsDir);
              fs::remove_all(base);
              const auto invoke = [&](const std::string& sub) {
                std::ostringstream out, err;
                const std::vector<std::string> args = {
                    "fig2", "--runs", "50", "--seed", "1",
                    "--out", (base / sub).string()};
                return dispatch(args, out, err);
              };
              check.expect(invoke("a") == 0, "first invocation failed");
              check.expect(invoke("b") == 0, "second invocation failed");
              const auto slurp = [](const fs::path& p) {
                std::ifstream f(p, std::ios::binary);
                std::ostringstream ss;
                ss << f.rdbuf();
                return ss.str();
              };
              const std::string ra = slurp(base / "a" / "records.csv");
              check.expect(!ra.empty(), "no records written");
              check.expect(ra == slurp(base / "b" / "records.csv"),
                           "records differ");
              check.expect(slurp(base / "a" / "aggregates.json") ==
                               slurp(base / "b" / "aggregates.json"),
                           "aggregates differ");
              fs::remove_all(base);
            });

  criterion(
      11, "hierarchical sweep consistency (n=2 closed form, n=3 vs FD)",
      [](Check& check) {
        std::mt19937_64 eng(311);
        // n = 2: the general sweep equals the two-agent form.
        for (int s = 0; s < 100; ++s) {
          const double g = 0.2 + 5.0 * unit(eng);
          const double eta = 0.1 + 1.9 * unit(eng);
          const PayoffTensor game = two_action_game(g / 2, -g / 2);
          const JointPolicy policy =
              JointPolicy::reduced({unit(eng), unit(eng)});
          const StepResult two = hla_two_agent_delta(game, policy, eta, 1);
          const StepResult general = hla_delta(game, policy, eta, {0, 1});
          check.expect(
              std::abs(two.deltas[0][0] - general.deltas[0][0]) < 1e-12 &&
                  std::abs(two.deltas[1][0] - general.deltas[1][0]) < 1e-12,
              "n=2 mismatch at sample " + std::to_string(s));
        }

        // n = 3: every sweep branch against the finite-difference oracle.
        for (int trial = 0; trial < 10; ++trial) {
          FdSweep oracle;
          std::vector<double> entries(8);
          for (double& e : entries) e = 4.0 * unit(eng) - 2.0;
          for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
              for (int c = 0; c < 2; ++c) {
                oracle.r[a][b][c] = entries[a * 4 + b * 2 + c];
              }
            }
          }
          oracle.eta = 0.2 + unit(eng);
          const PayoffTensor game({2, 2, 2}, entries);
          const std::array<double, 3> theta = {0.1 + 0.8 * unit(eng),
                                               0.1 + 0.8 * unit(eng),
                                               0.1 + 0.8 * unit(eng)};
          const JointPolicy policy =
              JointPolicy::reduced({theta[0], theta[1], theta[2]});
          const std::vector<int> identity = {0, 1, 2};
          for (int i = 2; i >= 0; --i) {
            oracle.run_down_to(i + 1, theta);
            for (int j = 0; j <= i; ++j) {
              const double got = hla_level_delta(game, policy, oracle.eta,
                                                 identity, j, i)[0];
              const double want = oracle.level_delta(j, i, theta);
              check.expect(close_rel(got, want),
                           "branch (i=" + std::to_string(i + 1) +
                               ",j=" + std::to_string(j + 1) + ") got " +
                               fmt(got) + " want " + fmt(want));
            }
          }
        }
      });

  std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED\n"
                                : std::to_string(g_failures) +
                                      " CRITERIA FAILED\n");
  return g_failures;
}
