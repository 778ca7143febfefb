#include <vector>

#include "jket/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return jket::run_command(args);
}
