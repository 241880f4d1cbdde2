// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <spdlog/spdlog.h>

int main(int argc, char** argv) {
  // Fold progress lines drown the test report.
  spdlog::set_level(spdlog::level::warn);
  return doctest::Context(argc, argv).run();
}
