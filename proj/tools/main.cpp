#include <iostream>

#include "lltensor/cli.hpp"

int main(int argc, char** argv) { return lltensor::cli::run(argc, argv, std::cout, std::cerr); }
