#include <iostream>

#include "posilab/cli.hpp"

int main(int argc, char** argv) {
  return posilab::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
