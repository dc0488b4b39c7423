#include <iostream>

#include "nde/cli.hpp"

int main(int argc, char** argv) { return nde::cli::run(argc, argv, std::cout, std::cerr); }
