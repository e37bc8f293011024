#pragma once

#include "palmnut/errors.hpp"
#include "palmnut/vector.hpp"
#include "palmnut/random.hpp"
#include "palmnut/wavelet.hpp"
#include "palmnut/operators.hpp"
#include "palmnut/regularizers.hpp"
#include "palmnut/problem.hpp"
#include "palmnut/solvers.hpp"
#include "palmnut/phantom.hpp"
#include "palmnut/io.hpp"
#include "palmnut/experiments.hpp"
