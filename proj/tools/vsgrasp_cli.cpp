#include <iostream>
#include <string>
#include <vector>

#include "vsgrasp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return vsgrasp::cli_main(args, std::cout, std::cerr);
}
