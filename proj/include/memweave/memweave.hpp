#pragma once

#include "memweave/analytic.hpp"
#include "memweave/calibration.hpp"
#include "memweave/error.hpp"
#include "memweave/policy.hpp"
#include "memweave/report.hpp"
#include "memweave/sim.hpp"
