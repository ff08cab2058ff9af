#pragma once

#include "belief.hpp"
#include "budgeting.hpp"
#include "config.hpp"
#include "consistency.hpp"
#include "decoding.hpp"
#include "error.hpp"
#include "explain.hpp"
#include "focal_set.hpp"
#include "fuzzy_logic.hpp"
#include "hierarchy.hpp"
#include "matrix.hpp"
#include "metrics.hpp"
#include "predictions.hpp"
#include "trainer.hpp"
