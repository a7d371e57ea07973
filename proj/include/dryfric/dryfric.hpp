#pragma once

#include "dryfric/core_types.hpp"
#include "dryfric/engine.hpp"
#include "dryfric/errors.hpp"
#include "dryfric/friction_law.hpp"
#include "dryfric/kozlov_gap.hpp"
#include "dryfric/models/ball_plane.hpp"
#include "dryfric/models/cushion.hpp"
#include "dryfric/models/painleve.hpp"
#include "dryfric/multiplier_solver.hpp"
