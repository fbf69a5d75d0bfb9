#include <iostream>

#include "subdetector/cli/commands.hpp"
#include "subdetector/gradcore/dense_array.hpp"

int main(int argc, char** argv) {
  subdetector::grad::retain_freed_memory();
  return subdetector::cli::run_cli(argc, argv, std::cout, std::cerr);
}
