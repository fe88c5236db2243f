#pragma once

// Evaluation tooling: phantoms, scaling, surface noise, graph comparison.

#include "vessel/harness/compare.hpp"
#include "vessel/harness/noise.hpp"
#include "vessel/harness/phantoms.hpp"
#include "vessel/harness/rng.hpp"
#include "vessel/harness/scale.hpp"
