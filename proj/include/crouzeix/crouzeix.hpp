#pragma once

// Core numerics. Persistence and output formats live in io.hpp.

#include "bfgs.hpp"
#include "experiment.hpp"
#include "fov_boundary.hpp"
#include "poly_matrix.hpp"
#include "ratio.hpp"
#include "stationarity.hpp"
