#pragma once

// Umbrella header for the FDR-HS toolkit.

#include "fdrhs/baselines.hpp"
#include "fdrhs/engine.hpp"
#include "fdrhs/genlasso.hpp"
#include "fdrhs/grid.hpp"
#include "fdrhs/io.hpp"
#include "fdrhs/metrics.hpp"
#include "fdrhs/params.hpp"
#include "fdrhs/phantom.hpp"
#include "fdrhs/pipeline.hpp"
#include "fdrhs/stats.hpp"
