#pragma once

#include "cubicdyn/coefficients.hpp"
#include "cubicdyn/cso.hpp"
#include "cubicdyn/csp_discrete.hpp"
#include "cubicdyn/error.hpp"
#include "cubicdyn/gaussian.hpp"
#include "cubicdyn/generator_residuals.hpp"
#include "cubicdyn/io.hpp"
#include "cubicdyn/kernel_family.hpp"
#include "cubicdyn/measure_reduce.hpp"
#include "cubicdyn/parallel.hpp"
#include "cubicdyn/partition.hpp"
#include "cubicdyn/quadrature.hpp"
#include "cubicdyn/random.hpp"
#include "cubicdyn/richardson.hpp"
#include "cubicdyn/simplex.hpp"
#include "cubicdyn/tensor.hpp"
