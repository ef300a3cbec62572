#pragma once

#include <string>

#include "specctrl/grid.hpp"

namespace specctrl {

// `.grid` layout: one JSON header line (kind, sizes, parameters, counts)
// terminated by '\n', then raw little-endian arrays in declared order:
// coords (float64, dim per node), weights (float64), cosh_mode metric and
// midpoint metric (float64), and the int32 lattice map for 2D kinds.
void save_grid(const Grid& g, const std::string& path);
Grid load_grid(const std::string& path);

}  // namespace specctrl
