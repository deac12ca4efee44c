#pragma once

// Everything in one include.
#include "cinf/cascade_io.hpp"
#include "cinf/config.hpp"
#include "cinf/degrade.hpp"
#include "cinf/error.hpp"
#include "cinf/experiments.hpp"
#include "cinf/hawkes.hpp"
#include "cinf/hawkes_fit.hpp"
#include "cinf/influence_tests.hpp"
#include "cinf/network.hpp"
#include "cinf/ranker.hpp"
#include "cinf/rng.hpp"
#include "cinf/spectral.hpp"
#include "cinf/stats.hpp"
