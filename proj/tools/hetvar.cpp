#include <iostream>

#include "hetvar/cli.hpp"

int main(int argc, char** argv) { return hetvar::cli::run(argc, argv, std::cout, std::cerr); }
