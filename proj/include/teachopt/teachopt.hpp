#pragma once

#include "teachopt/archive.hpp"
#include "teachopt/balance.hpp"
#include "teachopt/config.hpp"
#include "teachopt/errors.hpp"
#include "teachopt/force.hpp"
#include "teachopt/innovization.hpp"
#include "teachopt/kinematics.hpp"
#include "teachopt/model.hpp"
#include "teachopt/moea.hpp"
#include "teachopt/parallel.hpp"
#include "teachopt/problem.hpp"
#include "teachopt/random.hpp"
