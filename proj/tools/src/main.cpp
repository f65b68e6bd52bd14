#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return coastal::tools::cli_dispatch(argc, argv, std::cout, std::cerr); }
