#include <iostream>

#include "gqfi/cli/commands.hpp"

int main(int argc, char** argv) { return gqfi::cli::run(argc, argv, std::cout, std::cerr); }
