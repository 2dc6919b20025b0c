#include <iostream>

#include "slotcast/cli.hpp"

int main(int argc, char** argv) { return slotcast::cli::run(argc, argv, std::cout, std::cerr); }
