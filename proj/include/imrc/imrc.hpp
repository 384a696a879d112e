// Copyright Contributors to the imrc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "imrc/bench.hpp"
#include "imrc/camera.hpp"
#include "imrc/chamfer.hpp"
#include "imrc/core.hpp"
#include "imrc/density_grid.hpp"
#include "imrc/io.hpp"
#include "imrc/kdtree.hpp"
#include "imrc/marching_cubes.hpp"
#include "imrc/metric.hpp"
#include "imrc/observation.hpp"
#include "imrc/parallel.hpp"
#include "imrc/sh.hpp"
#include "imrc/synth.hpp"
