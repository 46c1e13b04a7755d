#include "qf/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return qf::run_cli(argc, argv, std::cout, std::cerr); }
