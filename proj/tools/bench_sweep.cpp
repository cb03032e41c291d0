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

// Times the serial reference executor against the OpenMP one on the same
// campaign and checks that both produce identical records.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "coordlab/experiments.hpp"

namespace {

std::string records_bytes(const coordlab::SweepResult& result) {
  std::ostringstream out;
  coordlab::write_records_csv(out, result);
  return out.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace coordlab;
  int runs = 50;
  if (argc > 1) runs = std::atoi(argv[1]);

  SweepConfig cfg;
  cfg.runs_per_cell = runs;
  cfg.master_seed = 1;

  std::cout << "workload: " << cfg.rules.size() * cfg.g_values.size() * runs
            << " training runs (three-action game, " << runs
            << " per cell)\n";

  auto t0 = std::chrono::steady_clock::now();
  const SweepResult serial = run_sweep_serial(cfg);
  const double t_serial = seconds_since(t0);
  std::cout << "serial reference: " << t_serial << " s\n";

#ifdef _OPENMP
  const int hw = omp_get_max_threads();
#else
  const int hw = 1;
#endif
  for (int jobs = 2; jobs <= hw; jobs *= 2) {
    cfg.jobs = jobs;
    t0 = std::chrono::steady_clock::now();
    const SweepResult parallel = run_sweep(cfg);
    const double t_par = seconds_since(t0);
    const bool same = records_bytes(parallel) == records_bytes(serial);
    std::cout << "openmp x" << jobs << ":        " << t_par << " s  (speedup "
              << t_serial / t_par << ", records "
              << (same ? "identical" : "DIFFER") << ")\n";
    if (!same) return 1;
  }
  return 0;
}
