#include <iostream>

#include "fontauth/cli/cli.hpp"

int main(int argc, char** argv) { return fontauth::cli::run(argc, argv, std::cout, std::cerr); }
