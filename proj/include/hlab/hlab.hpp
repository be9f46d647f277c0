#pragma once

#include "errors.hpp"
#include "point.hpp"
#include "ifs.hpp"
#include "nearest.hpp"
#include "attractor.hpp"
#include "report.hpp"
#include "conditions.hpp"
#include "measure.hpp"
#include "cells.hpp"
#include "operators.hpp"
#include "bimodule.hpp"
#include "io.hpp"
