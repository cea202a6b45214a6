#pragma once

#include "servipricer/calibrate.hpp"
#include "servipricer/evaluate.hpp"
#include "servipricer/hazard.hpp"
#include "servipricer/io.hpp"
#include "servipricer/pricing.hpp"
#include "servipricer/simulate.hpp"
#include "servipricer/types.hpp"
