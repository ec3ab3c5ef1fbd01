#pragma once

#include "lgc/core.hpp"
#include "lgc/env.hpp"
#include "lgc/graph.hpp"
#include "lgc/llm.hpp"
#include "lgc/metrics.hpp"
#include "lgc/nn.hpp"
#include "lgc/planner.hpp"
#include "lgc/policy.hpp"
#include "lgc/reward.hpp"
#include "lgc/trainer.hpp"
#include "lgc/util.hpp"
