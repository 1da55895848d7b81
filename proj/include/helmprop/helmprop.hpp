#pragma once

#include "band_lu.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "green.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "model_gen.hpp"
#include "operator.hpp"
#include "parallel.hpp"
#include "pml.hpp"
#include "quadtree.hpp"
#include "solver.hpp"
#include "trace_engine.hpp"
#include "transfer.hpp"
