#include <iostream>
#include <string>
#include <vector>

#include "pullcons/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return pullcons::cli_main(args, std::cout, std::cerr);
}
