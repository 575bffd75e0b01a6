#pragma once

#include "svc/covkernel.hpp"
#include "svc/dataio.hpp"
#include "svc/dataset.hpp"
#include "svc/errors.hpp"
#include "svc/gibbs.hpp"
#include "svc/knots.hpp"
#include "svc/ram.hpp"
#include "svc/rng.hpp"
#include "svc/simlab.hpp"
