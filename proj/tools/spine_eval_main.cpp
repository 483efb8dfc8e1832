#include <iostream>
#include <string>
#include <vector>

#include "spine_eval/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return spine_eval::run_cli(args, std::cout, std::cerr);
}
