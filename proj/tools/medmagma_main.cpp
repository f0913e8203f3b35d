#include <string>
#include <vector>

#include "medmagma/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return medmagma::cli::run(args);
}
