// Copyright 2026 The Elasticsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "elastic/sweep_runner.h"

#include <exception>

#include <omp.h>

namespace elastic {

std::vector<PointResult> run_points_serial(const ExperimentConfig &config,
                                           const std::vector<ExperimentPoint> &points) {
  std::vector<PointResult> out;
  out.reserve(points.size());
  for (const auto &p : points) out.push_back(run_point(config, p));
  return out;
}

std::vector<PointResult> run_points_parallel(const ExperimentConfig &config,
                                             const std::vector<ExperimentPoint> &points,
                                             int jobs) {
  std::vector<PointResult> out(points.size());
  std::vector<std::exception_ptr> errors(points.size());
  const long n = static_cast<long>(points.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs > 0 ? jobs : 1)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = run_point(config, points[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace elastic
