#pragma once

#include "ddopt/bounds.hpp"
#include "ddopt/engine.hpp"
#include "ddopt/error.hpp"
#include "ddopt/experiment.hpp"
#include "ddopt/num.hpp"
#include "ddopt/problem.hpp"
#include "ddopt/problem_io.hpp"
#include "ddopt/random.hpp"
#include "ddopt/reference.hpp"
#include "ddopt/schedule.hpp"
#include "ddopt/subproblem.hpp"
