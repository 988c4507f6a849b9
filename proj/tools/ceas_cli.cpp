#include <iostream>
#include <string>
#include <vector>

#include "ceas/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ceas::run_cli(args, std::cout, std::cerr);
}
