#pragma once

#include "evdemand/core.hpp"
#include "evdemand/data_model.hpp"
#include "evdemand/rate_curve.hpp"
#include "evdemand/estimators.hpp"
#include "evdemand/demand_density.hpp"
#include "evdemand/epc_montecarlo.hpp"
#include "evdemand/scenario.hpp"
#include "evdemand/run_config.hpp"
#include "evdemand/commands.hpp"
