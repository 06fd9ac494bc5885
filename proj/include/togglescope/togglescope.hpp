#pragma once

#include "togglescope/assessment.hpp"
#include "togglescope/config.hpp"
#include "togglescope/diff.hpp"
#include "togglescope/error.hpp"
#include "togglescope/ledger.hpp"
#include "togglescope/metrics.hpp"
#include "togglescope/miner.hpp"
#include "togglescope/report.hpp"
#include "togglescope/survival.hpp"
#include "togglescope/time.hpp"
