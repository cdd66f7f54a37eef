#include <iostream>

#include "mixdyn/cli.hpp"

int main(int argc, char** argv) { return mixdyn::cli::run(argc, argv, std::cout, std::cerr); }
