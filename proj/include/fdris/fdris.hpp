#pragma once

#include "fdris/types.hpp"
#include "fdris/scenario.hpp"
#include "fdris/channel.hpp"
#include "fdris/network.hpp"
#include "fdris/wmmse.hpp"
#include "fdris/phase_opt.hpp"
#include "fdris/bcd.hpp"
#include "fdris/harness.hpp"
#include "fdris/validation.hpp"
