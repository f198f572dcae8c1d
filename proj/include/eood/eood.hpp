#pragma once

#include "eood/core_types.hpp"
#include "eood/entropy.hpp"
#include "eood/errors.hpp"
#include "eood/evaluation.hpp"
#include "eood/features.hpp"
#include "eood/ingest.hpp"
#include "eood/metrics.hpp"
#include "eood/parallel.hpp"
#include "eood/pseudo_ood.hpp"
#include "eood/rng.hpp"
#include "eood/scoring.hpp"
#include "eood/selection.hpp"
#include "eood/selftest.hpp"
