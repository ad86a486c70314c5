#include <iostream>
#include <string>
#include <vector>

#include "simcount/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return simcount::run_cli(args, std::cout, std::cerr);
}
