#include <iostream>

#include "mrad/cli.hpp"

int main(int argc, char** argv) { return mrad::run_cli(argc, argv, std::cout, std::cerr); }
