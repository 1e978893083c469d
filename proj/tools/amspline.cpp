#include <iostream>

#include "amspline/cli.hpp"

int main(int argc, char** argv) {
  return amspline::cli::run(argc, argv, std::cout, std::cerr);
}
