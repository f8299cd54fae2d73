#pragma once

#include "homodyne/analytic.hpp"
#include "homodyne/ensemble.hpp"
#include "homodyne/protocols.hpp"
#include "homodyne/quadrature.hpp"
#include "homodyne/qubit.hpp"
#include "homodyne/random.hpp"
#include "homodyne/sde.hpp"
#include "homodyne/speedup.hpp"
