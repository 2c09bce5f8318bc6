#include <iostream>

#include "damln/cli.h"

int main(int argc, char** argv) {
  return damln::RunCli(argc, argv, std::cout, std::cerr);
}
