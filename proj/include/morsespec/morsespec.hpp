#pragma once

#include "morsespec/base_dynamics.hpp"
#include "morsespec/cocycle.hpp"
#include "morsespec/errors.hpp"
#include "morsespec/linalg.hpp"
#include "morsespec/morse.hpp"
#include "morsespec/parallel.hpp"
#include "morsespec/projective.hpp"
#include "morsespec/scenarios.hpp"
#include "morsespec/spectra.hpp"
#include "morsespec/subspaces.hpp"
