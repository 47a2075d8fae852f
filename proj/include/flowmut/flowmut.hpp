// SPDX-License-Identifier: Apache-2.0
#pragma once

// Umbrella header for the whole toolkit.

#include "flowmut/analysis.hpp"
#include "flowmut/baseline.hpp"
#include "flowmut/campaign.hpp"
#include "flowmut/chart.hpp"
#include "flowmut/chart_json.hpp"
#include "flowmut/eval.hpp"
#include "flowmut/expr.hpp"
#include "flowmut/llm_client.hpp"
#include "flowmut/prompt.hpp"
#include "flowmut/proposals.hpp"
#include "flowmut/result.hpp"
#include "flowmut/rng.hpp"
#include "flowmut/simulate.hpp"
#include "flowmut/suite_json.hpp"
#include "flowmut/validate.hpp"
#include "flowmut/value.hpp"
