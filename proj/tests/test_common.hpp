#pragma once

#include <catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "servipricer/types.hpp"

namespace sp = servipricer;
