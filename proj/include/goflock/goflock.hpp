#pragma once
/**
 * @file goflock.hpp
 * @brief Umbrella header for the whole library.
 */

#include "goflock/geometry.hpp"
#include "goflock/random.hpp"
#include "goflock/world.hpp"
#include "goflock/mapping.hpp"
#include "goflock/perception.hpp"
#include "goflock/navigation.hpp"
#include "goflock/sim.hpp"
#include "goflock/metrics.hpp"
#include "goflock/config.hpp"
#include "goflock/io.hpp"
#include "goflock/plot.hpp"
#include "goflock/experiment.hpp"
