#include <iostream>
#include <string>
#include <vector>

#include "rdalloc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return rdalloc::cli::run(args, std::cout, std::cerr);
}
