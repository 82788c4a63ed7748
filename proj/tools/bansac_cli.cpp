#include <iostream>
#include <string>
#include <vector>

#include "bansac/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return bansac::run_cli(args, std::cout, std::cerr);
}
