#pragma once

#include "uwmab/bandit/aoi_clock.hpp"
#include "uwmab/bandit/contextual_ucb.hpp"
#include "uwmab/bandit/feedback_mab.hpp"
#include "uwmab/bandit/serialize.hpp"
#include "uwmab/bandit/types.hpp"
#include "uwmab/channel/acoustic.hpp"
#include "uwmab/exp/oracle.hpp"
#include "uwmab/exp/regret.hpp"
#include "uwmab/exp/report.hpp"
#include "uwmab/exp/runner.hpp"
#include "uwmab/exp/scenario.hpp"
#include "uwmab/netsim/frame.hpp"
#include "uwmab/netsim/metrics.hpp"
#include "uwmab/netsim/policy.hpp"
#include "uwmab/netsim/simulator.hpp"
#include "uwmab/netsim/topology.hpp"
