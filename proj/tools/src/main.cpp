#include <iostream>

#include "cbeta/cli/commands.hpp"

int main(int argc, char** argv) { return cbeta::cli::run_cli(argc, argv, std::cout, std::cerr); }
