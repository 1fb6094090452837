// Copyright 2026 The fdgrouper Authors
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

#pragma once

#include "fdgrouper/units.hpp"
#include "fdgrouper/system_model.hpp"
#include "fdgrouper/rate_engine.hpp"
#include "fdgrouper/sca_approx.hpp"
#include "fdgrouper/conic_program.hpp"
#include "fdgrouper/solver.hpp"
#include "fdgrouper/conic_model.hpp"
#include "fdgrouper/algorithms.hpp"
#include "fdgrouper/config_io.hpp"
#include "fdgrouper/experiments.hpp"
