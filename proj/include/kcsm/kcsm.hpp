#pragma once

#include "kcsm/bootstrap.hpp"
#include "kcsm/constraints.hpp"
#include "kcsm/errors.hpp"
#include "kcsm/glauber.hpp"
#include "kcsm/graph.hpp"
#include "kcsm/model.hpp"
#include "kcsm/northeast.hpp"
#include "kcsm/rng.hpp"
#include "kcsm/spectral.hpp"
#include "kcsm/spin_config.hpp"
#include "kcsm/threshold.hpp"
#include "kcsm/version.hpp"
