#pragma once

#include "chanest/baselines.hpp"
#include "chanest/bench.hpp"
#include "chanest/channel_model.hpp"
#include "chanest/config.hpp"
#include "chanest/cpu_clock.hpp"
#include "chanest/csv.hpp"
#include "chanest/errors.hpp"
#include "chanest/projection.hpp"
#include "chanest/rng.hpp"
#include "chanest/smoothed_l0.hpp"
#include "chanest/types.hpp"
