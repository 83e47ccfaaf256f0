#include <iostream>

#include "molerun/workflow/cli.hpp"

int main(int argc, char** argv) {
  return molerun::workflow::cli_main({argv + 1, argv + argc}, std::cout, std::cerr);
}
