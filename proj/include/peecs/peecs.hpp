#pragma once

// Umbrella header: SMC CB-MeMBer filtering with PEECS sensor control.

#include "peecs/rfs_core.hpp"
#include "peecs/models.hpp"
#include "peecs/cbmember.hpp"
#include "peecs/control.hpp"
#include "peecs/metrics.hpp"
#include "peecs/scenario.hpp"
#include "peecs/harness.hpp"
