#include <iostream>
#include <string>
#include <vector>

#include "zdpool/cli/commands.hpp"

int main(int argc, char** argv) {
  return zdpool::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
