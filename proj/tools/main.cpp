#include <iostream>

#include "nof1/cli.hpp"

int main(int argc, char** argv) { return nof1::cli::run(argc, argv, std::cout, std::cerr); }
