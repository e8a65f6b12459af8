#pragma once

#include "osposg/core/errors.hpp"
#include "osposg/core/game.hpp"
#include "osposg/core/types.hpp"

#include "osposg/lp/lp.hpp"

#include "osposg/bounds/bounds.hpp"

#include "osposg/solver/hsvi.hpp"
#include "osposg/solver/init.hpp"
#include "osposg/solver/stage.hpp"

#include "osposg/play/session.hpp"
#include "osposg/play/simulate.hpp"

#include "osposg/domains/patrolling.hpp"
#include "osposg/domains/pennies.hpp"
#include "osposg/domains/pursuit.hpp"
#include "osposg/domains/search.hpp"

#include "osposg/io/bounds_json.hpp"
#include "osposg/io/game_json.hpp"
#include "osposg/io/hash.hpp"
