#pragma once

// Umbrella header for the whole toolkit.

#include "kh/errors.hpp"
#include "kh/units.hpp"
#include "kh/spectral.hpp"
#include "kh/strip.hpp"
#include "kh/two_fluid.hpp"
#include "kh/symbols.hpp"
#include "kh/stability.hpp"
#include "kh/kelvin.hpp"
#include "kh/evolution.hpp"
#include "kh/swsw.hpp"
#include "kh/scenarios.hpp"
