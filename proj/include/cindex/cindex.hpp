#pragma once

// Umbrella header for the censored single-index regression library.

#include "cindex/beran.hpp"
#include "cindex/cox.hpp"
#include "cindex/csv.hpp"
#include "cindex/dataset.hpp"
#include "cindex/errors.hpp"
#include "cindex/index_regression.hpp"
#include "cindex/kernels.hpp"
#include "cindex/nelder_mead.hpp"
#include "cindex/parallel.hpp"
#include "cindex/pipeline.hpp"
#include "cindex/rng.hpp"
#include "cindex/simulate.hpp"
#include "cindex/study.hpp"
#include "cindex/weighted_measure.hpp"
