#pragma once

#include <string>
#include <vector>

#include "can/model.hpp"

namespace can {

// Median wall milliseconds per inference forward at 16:9 for the given
// height; one warm-up run, then repeats timed runs on the same image.
double bench_forward(const CanModel &model, int height, int repeats,
                     bool constant_content = false);

namespace cli {

// Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numeric failure.
int run_command(const std::vector<std::string> &args);

} // namespace cli
} // namespace can
