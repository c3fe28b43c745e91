#pragma once

#include "dwre/core.hpp"
#include "dwre/density.hpp"
#include "dwre/maps.hpp"
#include "dwre/environment.hpp"
#include "dwre/model.hpp"
#include "dwre/walk.hpp"
#include "dwre/cocycle.hpp"
#include "dwre/conditions.hpp"
#include "dwre/cones.hpp"
#include "dwre/gibbs.hpp"
