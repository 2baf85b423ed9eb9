#include <iostream>

#include "cdcnn/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return cdcnn::cli::run(args, std::cout, std::cerr);
}
