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
#pragma once

#include <vector>

#include "elastic/experiment.h"

namespace elastic {

/// Reference runner: points one after another on the calling thread.
std::vector<PointResult> run_points_serial(const ExperimentConfig &config,
                                           const std::vector<ExperimentPoint> &points);

/// OpenMP runner: one simulation per worker at a time. Results come back in
/// point order and are identical to the serial runner's.
std::vector<PointResult> run_points_parallel(const ExperimentConfig &config,
                                             const std::vector<ExperimentPoint> &points,
                                             int jobs);

}  // namespace elastic
