#include <iostream>

#include "ksnh/cli.hpp"

int main(int argc, char** argv) { return ksnh::run_cli(argc, argv, std::cout, std::cerr); }
