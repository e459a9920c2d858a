#pragma once

#include "nonlocal/error.hpp"
#include "nonlocal/quadrature.hpp"
#include "nonlocal/kernel.hpp"
#include "nonlocal/mesh.hpp"
#include "nonlocal/discretization.hpp"
#include "nonlocal/spectral.hpp"
#include "nonlocal/nonlinearity.hpp"
#include "nonlocal/variational.hpp"
