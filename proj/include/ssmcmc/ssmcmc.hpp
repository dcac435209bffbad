#ifndef SSMCMC_SSMCMC_HPP
#define SSMCMC_SSMCMC_HPP

#include "ssmcmc/diagnostics.hpp"
#include "ssmcmc/errors.hpp"
#include "ssmcmc/io.hpp"
#include "ssmcmc/mixture.hpp"
#include "ssmcmc/models.hpp"
#include "ssmcmc/oracle.hpp"
#include "ssmcmc/precision.hpp"
#include "ssmcmc/recursions.hpp"
#include "ssmcmc/rng.hpp"
#include "ssmcmc/samplers.hpp"
#include "ssmcmc/series.hpp"
#include "ssmcmc/version.hpp"
#include "ssmcmc/window_filter.hpp"

#endif
