#include <iostream>

#include "tarc/cli.hpp"

int main(int argc, char** argv) {
  return tarc::cli_main(argc, argv, std::cout, std::cerr);
}
