#include <iostream>
#include <string>
#include <vector>

#include "dfd/cli/commands.hpp"
#include "dfd/runtime.hpp"

int main(int argc, char** argv) {
  dfd::tune_allocator();
  std::vector<std::string> args(argv + 1, argv + argc);
  return dfd::cli::run(args, std::cout, std::cerr);
}
