#pragma once

#include "exid/env/cartpole.hpp"
#include "exid/env/minigrid.hpp"
#include "exid/env/mountain_car.hpp"
