#pragma once

#include "diagnostics.hpp"
#include "integrator.hpp"
#include "mesh.hpp"
#include "physics.hpp"
#include "poisson.hpp"
#include "scenarios.hpp"
#include "spatial.hpp"
#include "tableaux.hpp"
