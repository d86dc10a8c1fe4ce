#ifndef BCOPS_HPP_
#define BCOPS_HPP_
#pragma once

#include "bcops/conformal.hpp"
#include "bcops/datagen.hpp"
#include "bcops/dataset.hpp"
#include "bcops/error.hpp"
#include "bcops/experiment.hpp"
#include "bcops/forest.hpp"
#include "bcops/metrics.hpp"
#include "bcops/noise.hpp"
#include "bcops/parallel.hpp"
#include "bcops/rng.hpp"

#endif  // BCOPS_HPP_
