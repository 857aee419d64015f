#pragma once

#include "robustsc/errors.hpp"
#include "robustsc/rng.hpp"
#include "robustsc/signal.hpp"
#include "robustsc/synthesis.hpp"
#include "robustsc/estimators.hpp"
#include "robustsc/spectral.hpp"
#include "robustsc/metrics.hpp"
#include "robustsc/io.hpp"
#include "robustsc/render.hpp"
#include "robustsc/config.hpp"
#include "robustsc/sweep.hpp"
