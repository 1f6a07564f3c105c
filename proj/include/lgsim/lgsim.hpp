#pragma once

#include "lgsim/errors.hpp"
#include "lgsim/experiment.hpp"
#include "lgsim/optics.hpp"
#include "lgsim/qcore.hpp"
#include "lgsim/stats.hpp"
#include "lgsim/visibility_fit.hpp"
