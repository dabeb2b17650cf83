#include "amdyn/cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return amdyn::run_cli(argc, argv, std::cout, std::cerr); }
