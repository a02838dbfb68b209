#pragma once

#include "sgwave/errors.hpp"
#include "sgwave/core_model.hpp"
#include "sgwave/oscillator_basis.hpp"
#include "sgwave/exact_evolution.hpp"
#include "sgwave/approximations.hpp"
#include "sgwave/observables.hpp"
#include "sgwave/tomography.hpp"
#include "sgwave/textbook_reference.hpp"
