#pragma once

#include "roundvol/asymptotics.hpp"
#include "roundvol/error.hpp"
#include "roundvol/estimate.hpp"
#include "roundvol/harness.hpp"
#include "roundvol/model.hpp"
#include "roundvol/parallel.hpp"
#include "roundvol/rng.hpp"
#include "roundvol/simulate.hpp"
#include "roundvol/wavelet.hpp"
