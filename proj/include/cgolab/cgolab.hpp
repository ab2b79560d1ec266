#pragma once

#include "cgolab/birman_schwinger.hpp"
#include "cgolab/cgo.hpp"
#include "cgolab/counterexample.hpp"
#include "cgolab/estimates.hpp"
#include "cgolab/exponent.hpp"
#include "cgolab/families.hpp"
#include "cgolab/fft.hpp"
#include "cgolab/forward.hpp"
#include "cgolab/grid.hpp"
#include "cgolab/kernels.hpp"
#include "cgolab/multipliers.hpp"
#include "cgolab/parallel.hpp"
#include "cgolab/potentials.hpp"
#include "cgolab/quadrature.hpp"
#include "cgolab/reconstruction.hpp"
#include "cgolab/report.hpp"
#include "cgolab/symbols.hpp"
