#pragma once

// Umbrella header for the whole library.

#include "qpred/datagen.hpp"
#include "qpred/dataset.hpp"
#include "qpred/estimators.hpp"
#include "qpred/eval.hpp"
#include "qpred/features.hpp"
#include "qpred/io_util.hpp"
#include "qpred/metrics.hpp"
#include "qpred/model_io.hpp"
#include "qpred/queue.hpp"
#include "qpred/rng.hpp"
#include "qpred/sim.hpp"
