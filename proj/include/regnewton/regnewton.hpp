#pragma once

#include "baselines.hpp"
#include "data_io.hpp"
#include "errors.hpp"
#include "harness.hpp"
#include "linalg.hpp"
#include "lm.hpp"
#include "newton.hpp"
#include "oracles.hpp"
#include "run_spec.hpp"
#include "trace.hpp"
