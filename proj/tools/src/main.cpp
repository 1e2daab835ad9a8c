#include <iostream>

#include "racer_cli/commands.hpp"

int main(int argc, char** argv) { return racer::cli::run(argc, argv, std::cout, std::cerr); }
