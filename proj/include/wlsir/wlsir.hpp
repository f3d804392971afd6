// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "wlsir/augmented.hpp"
#include "wlsir/densela.hpp"
#include "wlsir/error.hpp"
#include "wlsir/experiments.hpp"
#include "wlsir/fpsim.hpp"
#include "wlsir/krylov.hpp"
#include "wlsir/matrix_market.hpp"
#include "wlsir/problems.hpp"
#include "wlsir/refinement.hpp"
