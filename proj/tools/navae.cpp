#include <iostream>

#include "navae/cli_io.hpp"

int main(int argc, char** argv) { return navae::run_command(argc, argv, std::cout, std::cerr); }
