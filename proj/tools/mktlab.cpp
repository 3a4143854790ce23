#include <iostream>

#include "mktlab/cli.hpp"

int main(int argc, char** argv) { return mktlab::run_cli(argc, argv, std::cout, std::cerr); }
