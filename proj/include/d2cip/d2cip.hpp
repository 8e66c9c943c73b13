#pragma once

#include <d2cip/ablation.hpp>
#include <d2cip/core.hpp>
#include <d2cip/estimation.hpp>
#include <d2cip/io.hpp>
#include <d2cip/metrics.hpp>
#include <d2cip/motion.hpp>
#include <d2cip/observation.hpp>
#include <d2cip/refinement.hpp>
#include <d2cip/scenario.hpp>
#include <d2cip/serialization.hpp>
#include <d2cip/tracker.hpp>
