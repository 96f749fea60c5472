// SPDX-License-Identifier: MIT
/// \file main.cpp
/// \brief Command line entry point.

#include <cstdio>

#include "mpcqn/version.hpp"

int main(int argc, char** argv) {
  (void)argc;
  (void)argv;
  std::printf("mpcqn %s\n", mpcqn::version_string);
  return 0;
}
