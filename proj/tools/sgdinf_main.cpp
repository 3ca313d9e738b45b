#include <iostream>

#include "sgdinf/cli.hpp"

int main(int argc, char** argv) {
  return sgdinf::cli::main_entry(argc, argv, std::cout, std::cerr);
}
