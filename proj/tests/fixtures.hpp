#pragma once

#include "servipricer/types.hpp"

// ground-truth parameter set used across the test suites
inline servipricer::ModelParams truth_params() {
  servipricer::ModelParams p;
  p.hazard.alpha0 = 0.5;
  p.hazard.kappa0 = 0.623;
  p.hazard.gamma0 = 0.1;
  p.hazard.beta1 = {-0.2, 0.3, 0.4, -0.1};
  p.hazard.beta2 = 0.1;
  p.hazard.pm_interval = 1.0;
  p.hazard.alpha_c = 0.2;
  p.hazard.kappa_c = 2.0;
  p.type_logit.alpha = {{{0.9, 0.4, 0.1, 0.0, 0.1}, {0.9, 0.5, 0.0, 0.2, 0.2}}};
  p.severity.maintenance = {20.0, 3.0};
  p.severity.minor1 = {20.0, 3.0};
  p.severity.minor2 = {30.0, 5.0};
  p.severity.catastrophic = {20.0, 10.0};
  p.severity.frank_theta = 0.5;
  return p;
}
