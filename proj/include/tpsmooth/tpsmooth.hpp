#pragma once

#include "tpsmooth/commands.hpp"
#include "tpsmooth/config.hpp"
#include "tpsmooth/error.hpp"
#include "tpsmooth/farneback.hpp"
#include "tpsmooth/flow.hpp"
#include "tpsmooth/grid.hpp"
#include "tpsmooth/io.hpp"
#include "tpsmooth/layout.hpp"
#include "tpsmooth/metrics.hpp"
#include "tpsmooth/report.hpp"
#include "tpsmooth/rng.hpp"
#include "tpsmooth/smoother.hpp"
#include "tpsmooth/stats.hpp"
#include "tpsmooth/svg_plot.hpp"
#include "tpsmooth/synth.hpp"
