#include <iostream>
#include <string>
#include <vector>

#include "subtask_forge/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return subtask_forge::cli::run(args, std::cout, std::cerr);
}
