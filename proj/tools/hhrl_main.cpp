#include <string>
#include <vector>

#include "hhrl/eval.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hhrl::cli_main(args);
}
