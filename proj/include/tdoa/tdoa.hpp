#pragma once

#include "tdoa/errors.hpp"
#include "tdoa/array_geometry.hpp"
#include "tdoa/tdoa_space.hpp"
#include "tdoa/incomplete.hpp"
#include "tdoa/planar.hpp"
#include "tdoa/localizers.hpp"
#include "tdoa/noise_stats.hpp"
#include "tdoa/experiment.hpp"
