#include <iostream>

#include "malweb/cli.hpp"

int main(int argc, char** argv) { return malweb::cli::run(argc, argv, std::cout, std::cerr); }
