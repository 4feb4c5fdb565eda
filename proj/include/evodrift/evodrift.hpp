#pragma once

#include "evodrift/conjunction.hpp"
#include "evodrift/core.hpp"
#include "evodrift/csq.hpp"
#include "evodrift/distributions.hpp"
#include "evodrift/drift.hpp"
#include "evodrift/dyadic.hpp"
#include "evodrift/engine.hpp"
#include "evodrift/harness.hpp"
#include "evodrift/hyperplane.hpp"
#include "evodrift/rng.hpp"
