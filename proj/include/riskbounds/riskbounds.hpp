#pragma once

#include "riskbounds/scenario.hpp"
#include "riskbounds/scenario_io.hpp"
#include "riskbounds/lqg.hpp"
#include "riskbounds/trajectory_distribution.hpp"
#include "riskbounds/orthant.hpp"
#include "riskbounds/collision_probabilities.hpp"
#include "riskbounds/union_bounds.hpp"
#include "riskbounds/monte_carlo.hpp"
#include "riskbounds/pipeline.hpp"
