#pragma once

// Evaluating and extracting feature-based explanations of classifiers via
// subset-restricted adversarial robustness.

#include "robex/attack.hpp"
#include "robex/attribution.hpp"
#include "robex/common.hpp"
#include "robex/criteria.hpp"
#include "robex/datasets.hpp"
#include "robex/dense.hpp"
#include "robex/feature_set.hpp"
#include "robex/game.hpp"
#include "robex/greedy.hpp"
#include "robex/harness.hpp"
#include "robex/io.hpp"
#include "robex/linear_oracle.hpp"
#include "robex/model.hpp"
#include "robex/parallel.hpp"
#include "robex/rng.hpp"
#include "robex/train.hpp"
