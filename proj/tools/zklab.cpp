#include <iostream>

#include "zk/cli.hpp"

int main(int argc, char** argv) { return zk::cli_main(argc, argv, std::cout, std::cerr); }
