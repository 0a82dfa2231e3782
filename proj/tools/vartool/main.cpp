#include <iostream>

#include "vartool/frontend.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return vartool::run_command(args, std::cout, std::cerr);
}
