#pragma once

// Everything: double-form algebra, conformal charts, grid calculus, boundary
// operators, Saint-Venant and elasticity solvers, suites and file formats.

#include "algebra.hpp"
#include "boundary.hpp"
#include "calculus.hpp"
#include "chart.hpp"
#include "combinatorics.hpp"
#include "elasticity.hpp"
#include "error.hpp"
#include "field.hpp"
#include "io.hpp"
#include "linalg.hpp"
#include "quadrature.hpp"
#include "random.hpp"
#include "saint_venant.hpp"
#include "studies.hpp"
#include "suites.hpp"
