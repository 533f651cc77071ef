#pragma once

#include "otk/algorithms.hpp"
#include "otk/analysis.hpp"
#include "otk/config.hpp"
#include "otk/enumeration.hpp"
#include "otk/errors.hpp"
#include "otk/experiments.hpp"
#include "otk/io.hpp"
#include "otk/model.hpp"
#include "otk/rng.hpp"
#include "otk/subsolvers.hpp"
#include "otk/thresholding.hpp"
