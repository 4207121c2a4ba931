#pragma once
// Convenience header pulling in the whole library.
#include <celer/errors.hpp>
#include <celer/numeric.hpp>
#include <celer/dataset.hpp>
#include <celer/libsvm.hpp>
#include <celer/datafit.hpp>
#include <celer/extrapolation.hpp>
#include <celer/solvers.hpp>
#include <celer/prox_newton.hpp>
#include <celer/working_set.hpp>
#include <celer/pathbench.hpp>
