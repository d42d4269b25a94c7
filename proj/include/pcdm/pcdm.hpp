#pragma once

#include "pcdm/blocks.hpp"
#include "pcdm/eso.hpp"
#include "pcdm/io.hpp"
#include "pcdm/model.hpp"
#include "pcdm/oracles.hpp"
#include "pcdm/rng.hpp"
#include "pcdm/sampling.hpp"
#include "pcdm/solver.hpp"
#include "pcdm/sparse_matrix.hpp"
#include "pcdm/theory.hpp"
