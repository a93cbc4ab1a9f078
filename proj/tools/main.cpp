#include <iostream>

#include "dvarimax/cli.hpp"

int main(int argc, char** argv) {
  return dvarimax::cli::run(argc, argv, std::cout, std::cerr);
}
