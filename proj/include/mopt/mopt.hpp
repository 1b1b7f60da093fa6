#pragma once

#include "mopt/common.hpp"
#include "mopt/diagnostics.hpp"
#include "mopt/flow.hpp"
#include "mopt/harness.hpp"
#include "mopt/hull.hpp"
#include "mopt/problems.hpp"
#include "mopt/rng.hpp"
#include "mopt/serialization.hpp"
#include "mopt/simplex_qp.hpp"
#include "mopt/solvers.hpp"
