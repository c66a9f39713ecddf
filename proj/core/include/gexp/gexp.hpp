#pragma once

#include "gexp/checks.hpp"
#include "gexp/csv.hpp"
#include "gexp/decompose.hpp"
#include "gexp/error.hpp"
#include "gexp/generator.hpp"
#include "gexp/oracle.hpp"
#include "gexp/paths.hpp"
#include "gexp/quadrature.hpp"
#include "gexp/recover.hpp"
#include "gexp/solver.hpp"
#include "gexp/types.hpp"
