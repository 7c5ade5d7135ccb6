// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return docrecon::cli::dispatch(args, std::cout, std::cerr);
}
