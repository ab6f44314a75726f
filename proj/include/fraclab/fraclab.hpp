#pragma once

#include "fraclab/errors.hpp"
#include "fraclab/extension.hpp"
#include "fraclab/fit.hpp"
#include "fraclab/forward.hpp"
#include "fraclab/fractional_operator.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/io.hpp"
#include "fraclab/norms.hpp"
#include "fraclab/reconstruction.hpp"
#include "fraclab/scenario.hpp"
#include "fraclab/special.hpp"
#include "fraclab/spectral.hpp"
#include "fraclab/ucp.hpp"
