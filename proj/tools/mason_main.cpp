#include <iostream>

#include "mason/cli.hpp"

int main(int argc, char** argv) { return mason::cli::run(argc, argv, std::cout, std::cerr); }
