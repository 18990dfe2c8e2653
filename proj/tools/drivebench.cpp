#include <iostream>
#include <string>
#include <vector>

#include "drivebench/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return drivebench::run_command(args, std::cout, std::cerr);
}
