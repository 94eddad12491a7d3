#pragma once

#include "run_config.hpp"

namespace jmmle::cli {

int cmd_simulate(const RunConfig& cfg);
int cmd_estimate(const RunConfig& cfg);
int cmd_test(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);
int cmd_replicate(const RunConfig& cfg);

}  // namespace jmmle::cli
