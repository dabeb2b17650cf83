#pragma once

#include "amdyn/saddle/ensemble.hpp"
#include "amdyn/saddle/nonhatted.hpp"
#include "amdyn/saddle/order_params.hpp"
#include "amdyn/saddle/prox.hpp"
#include "amdyn/saddle/solve.hpp"
#include "amdyn/saddle/theory_io.hpp"
