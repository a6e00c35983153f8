// Copyright 2026 The ihlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Everything in one include.

#pragma once

#include "ihlab/core/dataset_io.hpp"
#include "ihlab/core/mt19937.hpp"
#include "ihlab/core/parallel.hpp"
#include "ihlab/core/types.hpp"
#include "ihlab/encoder.hpp"
#include "ihlab/flow.hpp"
#include "ihlab/metrics.hpp"
#include "ihlab/similarity.hpp"
#include "ihlab/clustering.hpp"
#include "ihlab/assignment.hpp"
#include "ihlab/recovery.hpp"
#include "ihlab/attack.hpp"
#include "ihlab/prng_attack.hpp"
#include "ihlab/synthetic.hpp"
#include "ihlab/theory/problem.hpp"
#include "ihlab/theory/games.hpp"
#include "ihlab/theory/adversaries.hpp"
