#pragma once

#include "core.hpp"
#include "symbols.hpp"
#include "torus_field.hpp"
#include "wave_builder.hpp"
#include "geometry.hpp"
#include "diagnostics.hpp"
#include "integrator.hpp"
#include "config.hpp"
#include "scenarios.hpp"
#include "cli.hpp"
