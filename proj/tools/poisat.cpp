#include <iostream>

#include "poisat/cli.hpp"

int main(int argc, char** argv) { return poisat::cli::run(argc, argv, std::cout, std::cerr); }
