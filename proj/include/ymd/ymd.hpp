#pragma once

// Everything in one include.

#include "ymd/error.hpp"
#include "ymd/grid.hpp"
#include "ymd/liealg.hpp"
#include "ymd/spectral.hpp"
#include "ymd/coupling.hpp"
#include "ymd/fields.hpp"
#include "ymd/state.hpp"
#include "ymd/checkpoint.hpp"
#include "ymd/dynamics.hpp"
#include "ymd/gauge.hpp"
#include "ymd/analysis.hpp"
#include "ymd/verify.hpp"
#include "ymd/config.hpp"
#include "ymd/commands.hpp"
