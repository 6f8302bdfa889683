// Process entry point: forwards argv to the reusable CLI driver.

#include "cli_app.hpp"

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cvqkd::cli::run(args, std::cout, std::cerr);
}
