#include <iostream>

#include "csskit/cli.hpp"

int main(int argc, char** argv) { return csskit::cli::run(argc, argv, std::cout, std::cerr); }
