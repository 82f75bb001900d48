#include <iostream>

#include "stargen/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return stargen::run_cli(args, {std::cin, std::cout, std::cerr});
}
