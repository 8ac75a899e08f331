#include <iostream>
#include <string>
#include <vector>

#include "enthm/cli.hpp"

int main(int argc, char** argv) {
  return enthm::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
