// Copyright 2026 The trilinear-sense Authors
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

#pragma once

#include "trilinear/analytic_models.hpp"
#include "trilinear/constants.hpp"
#include "trilinear/csv.hpp"
#include "trilinear/errors.hpp"
#include "trilinear/estimation.hpp"
#include "trilinear/experiment_config.hpp"
#include "trilinear/experiments.hpp"
#include "trilinear/fock_algebra.hpp"
#include "trilinear/hamiltonians.hpp"
#include "trilinear/jacobi.hpp"
#include "trilinear/propagation.hpp"
#include "trilinear/trap_modes.hpp"
