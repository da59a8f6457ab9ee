#pragma once

// Core library: graph, mixing, objectives, noise, dynamics, diagnostics.
// The configuration/experiment layer lives under ndgd/harness/ and needs yaml-cpp.

#include "ndgd/diagnostics.hpp"
#include "ndgd/differentiation.hpp"
#include "ndgd/distance.hpp"
#include "ndgd/dynamics.hpp"
#include "ndgd/error.hpp"
#include "ndgd/graph.hpp"
#include "ndgd/mixing.hpp"
#include "ndgd/noise.hpp"
#include "ndgd/objective.hpp"
#include "ndgd/random.hpp"
#include "ndgd/spectral.hpp"
#include "ndgd/state.hpp"
