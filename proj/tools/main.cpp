#include <iostream>

#include "satstack/cli.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  return satstack::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
