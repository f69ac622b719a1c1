#include <vector>

#include "can/cli.hpp"

int main(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return can::cli::run_command(args);
}
