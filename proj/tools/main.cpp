#include <iostream>

#include "dmef/cli.hpp"

int main(int argc, char** argv) { return dmef::run_cli(argc, argv, std::cout, std::cerr); }
