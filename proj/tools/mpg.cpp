#include <iostream>
#include <string>
#include <vector>

#include "mpg/cli.hpp"

int main(int argc, char** argv) {
  return mpg::run_cli(std::vector<std::string>(argv, argv + argc), std::cout,
                      std::cerr);
}
