#pragma once

#include "vlcsim/scenario.hpp"
#include "vlcsim/random.hpp"
#include "vlcsim/channel.hpp"
#include "vlcsim/localization.hpp"
#include "vlcsim/prediction.hpp"
#include "vlcsim/protocol.hpp"
#include "vlcsim/mobility.hpp"
#include "vlcsim/engine.hpp"
#include "vlcsim/config.hpp"
#include "vlcsim/report.hpp"
