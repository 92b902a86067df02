#pragma once

#include "tgss/error.hpp"
#include "tgss/numkernel.hpp"
#include "tgss/geometry.hpp"
#include "tgss/operator.hpp"
#include "tgss/invpot.hpp"
#include "tgss/solvers.hpp"
#include "tgss/bench.hpp"
#include "tgss/selftest.hpp"
