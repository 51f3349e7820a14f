#include <iostream>
#include <string>
#include <vector>

#include "sdrl_app/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return sdrl::app::run_cli(args, std::cout, std::cerr);
}
