#include <iostream>

#include "triblock/cli.hpp"

int main(int argc, char** argv) { return triblock::cli::run(argc, argv, std::cout, std::cerr); }
