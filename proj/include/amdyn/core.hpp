#pragma once

#include "amdyn/core/errors.hpp"
#include "amdyn/core/linalg.hpp"
#include "amdyn/core/parallel.hpp"
#include "amdyn/core/rng.hpp"
#include "amdyn/core/stats.hpp"
#include "amdyn/core/tri_matrix.hpp"
