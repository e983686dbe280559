#include <iostream>

#include "stratus/cli.hpp"

int main(int argc, char** argv) { return stratus::cli::run_cli(argc, argv, std::cout, std::cerr); }
