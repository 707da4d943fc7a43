// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <string>
#include <vector>

#include "cfx/cli.hpp"

int main(int argc, char** argv) {
  cfx::configure_logging();
  std::vector<std::string> args(argv + 1, argv + argc);
  return cfx::cli_dispatch(args, std::cout, std::cerr);
}
