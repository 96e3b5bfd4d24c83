#pragma once

#include "wsaw/error.hpp"
#include "wsaw/model.hpp"
#include "wsaw/bessel.hpp"
#include "wsaw/kernels.hpp"
#include "wsaw/quadrature.hpp"
#include "wsaw/discretize.hpp"
#include "wsaw/spectral.hpp"
#include "wsaw/greenfn.hpp"
#include "wsaw/criticality.hpp"
#include "wsaw/monotonicity.hpp"
#include "wsaw/mcsim.hpp"
#include "wsaw/io.hpp"
#include "wsaw/config.hpp"
