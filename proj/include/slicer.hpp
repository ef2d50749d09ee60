#pragma once

#include "slicer/cascade.hpp"
#include "slicer/checks.hpp"
#include "slicer/dmp.hpp"
#include "slicer/error.hpp"
#include "slicer/experiment.hpp"
#include "slicer/graph.hpp"
#include "slicer/io.hpp"
#include "slicer/learner.hpp"
#include "slicer/metrics.hpp"
#include "slicer/rng.hpp"
