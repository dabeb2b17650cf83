#pragma once

#include "amdyn/am_sim/am.hpp"
#include "amdyn/am_sim/loss.hpp"
#include "amdyn/am_sim/model.hpp"
