#include <iostream>

#include "v2xsim/cli.hpp"

int main(int argc, char** argv) { return v2xsim::cli::run(argc, argv, std::cout, std::cerr); }
