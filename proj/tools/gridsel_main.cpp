#include <iostream>
#include <string>
#include <vector>

#include "gridsel/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return gridsel::run_cli(args, std::cout, std::cerr);
}
