#include <iostream>

#include "airobject/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return airobject::run_cli(args, std::cout, std::cerr);
}
