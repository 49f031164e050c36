#pragma once

#include "gdm/dataset.hpp"
#include "gdm/dataset_io.hpp"
#include "gdm/error.hpp"
#include "gdm/eval.hpp"
#include "gdm/graph.hpp"
#include "gdm/kernel.hpp"
#include "gdm/linalg.hpp"
#include "gdm/matrix_io.hpp"
#include "gdm/model_io.hpp"
#include "gdm/rng.hpp"
#include "gdm/solver.hpp"
#include "gdm/svg_plot.hpp"
