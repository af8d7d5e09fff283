#pragma once

// Umbrella header: compression-based information-distance estimation.

#include "infodist/alphabet.hpp"
#include "infodist/cli.hpp"
#include "infodist/distances.hpp"
#include "infodist/divergence.hpp"
#include "infodist/errors.hpp"
#include "infodist/estimators.hpp"
#include "infodist/io.hpp"
#include "infodist/markov.hpp"
#include "infodist/phylo.hpp"
