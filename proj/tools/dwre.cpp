#include <iostream>

#include "dwre/cli.hpp"

int main(int argc, char** argv) { return dwre::cli::run(argc, argv, std::cout, std::cerr); }
