#pragma once

#include "errors.hpp"
#include "state.hpp"
#include "random.hpp"
#include "policy.hpp"
#include "perturbation.hpp"
#include "objective.hpp"
#include "tca.hpp"
#include "ga.hpp"
#include "envs.hpp"
#include "trajectory.hpp"
#include "distill.hpp"
#include "campaign.hpp"
