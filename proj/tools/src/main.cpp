#include <iostream>

#include "srff_cli/cli.hpp"

int main(int argc, char** argv) { return srff::cli::run(argc, argv, std::cout, std::cerr); }
