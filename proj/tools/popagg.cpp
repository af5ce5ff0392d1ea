#include <iostream>

#include "popagg/cli.hpp"

int main(int argc, char** argv) { return popagg::cli::run(argc, argv, std::cout, std::cerr); }
