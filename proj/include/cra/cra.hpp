#pragma once

// Umbrella header for the cross-layer reliability analysis library.

#include "aging.hpp"
#include "composition.hpp"
#include "error.hpp"
#include "measure.hpp"
#include "model.hpp"
#include "mttf.hpp"
#include "pipeline.hpp"
#include "reliability.hpp"
#include "softerror.hpp"
#include "success_tree.hpp"
#include "system.hpp"
#include "thermal.hpp"
