#pragma once

// Boost 1.74's pchip.hpp calls isnan unqualified on a dependent Real; make
// std::isnan visible at the point of definition.
#include <cmath>

namespace boost::math::interpolators {
using std::isnan;
}

#include <boost/math/interpolators/pchip.hpp>
