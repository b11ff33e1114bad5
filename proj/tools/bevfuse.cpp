#include <iostream>
#include <string>
#include <vector>

#include "bevfuse/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return bevfuse::run_cli(args, std::cout, std::cerr);
}
