#pragma once

#include "advcontract/adv.hpp"
#include "advcontract/approx.hpp"
#include "advcontract/dp.hpp"
#include "advcontract/errors.hpp"
#include "advcontract/functions.hpp"
#include "advcontract/model.hpp"
#include "advcontract/nonadv.hpp"
#include "advcontract/presets.hpp"
#include "advcontract/report.hpp"
#include "advcontract/rng.hpp"
#include "advcontract/scenario.hpp"
#include "advcontract/sim.hpp"
