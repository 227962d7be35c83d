#pragma once

// Umbrella header. io.hpp pulls in the JSON and fmt dependencies; the numerical headers need only Eigen and Boost.

#include "core.hpp"
#include "duhamel.hpp"
#include "forms.hpp"
#include "io.hpp"
#include "mc.hpp"
#include "params.hpp"
#include "stable_kernel.hpp"
#include "verifier.hpp"
#include "weighted.hpp"
