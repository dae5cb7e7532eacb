#include <iostream>

#include "trajsem/cli.hpp"

int main(int argc, char** argv) {
  return trajsem::cli_main(argc, argv, std::cout, std::cerr);
}
