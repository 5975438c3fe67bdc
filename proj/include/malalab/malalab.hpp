#pragma once

#include "malalab/config.hpp"
#include "malalab/diagnostics.hpp"
#include "malalab/errors.hpp"
#include "malalab/finite_chain.hpp"
#include "malalab/kernels.hpp"
#include "malalab/oracle1d.hpp"
#include "malalab/potential.hpp"
#include "malalab/rng.hpp"
#include "malalab/stats.hpp"
#include "malalab/sweep.hpp"
#include "malalab/verify.hpp"
