// Copyright 2026 The RankUQ Authors.
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

#ifndef RANKUQ_RANKUQ_HPP_
#define RANKUQ_RANKUQ_HPP_

#include "rankuq/errors.hpp"
#include "rankuq/estimation.hpp"
#include "rankuq/io.hpp"
#include "rankuq/model.hpp"
#include "rankuq/parallel.hpp"
#include "rankuq/rank_sets.hpp"
#include "rankuq/rng.hpp"
#include "rankuq/simlab.hpp"
#include "rankuq/uncertainty.hpp"

#endif  // RANKUQ_RANKUQ_HPP_
