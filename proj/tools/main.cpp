// SPDX-License-Identifier: Apache-2.0
#include <string>
#include <vector>

#include "reno/cli.hpp"

int main(int argc, char** argv) {
  return reno::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
