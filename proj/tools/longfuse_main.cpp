#include <iostream>

#include "cli/commands.hpp"

int main(int argc, char **argv) { return longfuse::cli::run_cli(argc, argv, std::cout, std::cerr); }
