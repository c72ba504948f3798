#include "chypnosim/cli.hpp"

#include <iostream>

int main(int argc, char **argv) { return chypnosim::cli::run(argc, argv, std::cout, std::cerr); }
