#pragma once

// Nearest neighbor-Dirichlet mixture density estimation.

#include "nndm/classifier.hpp"
#include "nndm/cv.hpp"
#include "nndm/dataset.hpp"
#include "nndm/densities.hpp"
#include "nndm/draws.hpp"
#include "nndm/errors.hpp"
#include "nndm/evaluation.hpp"
#include "nndm/hyperparameters.hpp"
#include "nndm/io.hpp"
#include "nndm/model.hpp"
#include "nndm/neighbors.hpp"
#include "nndm/parallel.hpp"
#include "nndm/posterior.hpp"
#include "nndm/rng.hpp"
#include "nndm/student_t.hpp"
#include "nndm/variance.hpp"
