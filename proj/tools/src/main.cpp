#include <iostream>

#include "l2g_tools/cli.hpp"

int main(int argc, char** argv) {
  return l2g::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
