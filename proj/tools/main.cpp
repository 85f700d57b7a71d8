#include "depthedge/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return depthedge::run_cli(argc, argv, std::cout, std::cerr); }
