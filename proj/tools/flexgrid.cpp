#include <iostream>
#include <string>
#include <vector>

#include "flexgrid/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return flexgrid::app::run(args, std::cout, std::cerr);
}
