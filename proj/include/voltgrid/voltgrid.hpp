#pragma once

#include "voltgrid/bound_opt.hpp"
#include "voltgrid/controller.hpp"
#include "voltgrid/eigen.hpp"
#include "voltgrid/env.hpp"
#include "voltgrid/errors.hpp"
#include "voltgrid/grid_model.hpp"
#include "voltgrid/io.hpp"
#include "voltgrid/linalg.hpp"
#include "voltgrid/parallel.hpp"
#include "voltgrid/rng.hpp"
#include "voltgrid/stability.hpp"
#include "voltgrid/trainer.hpp"
#include "voltgrid/version.hpp"
