#include <iostream>

#include "mimo_crlb/cli.hpp"

int main(int argc, char** argv) { return mimo_crlb::cli::run(argc, argv, std::cout, std::cerr); }
