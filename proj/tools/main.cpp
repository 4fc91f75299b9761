#include <iostream>

#include "adoptnet/cli.hpp"

int main(int argc, char** argv) {
  return adoptnet::run_cli(argc, argv, std::cout, std::cerr);
}
