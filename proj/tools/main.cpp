#include "pinn/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return pinn::cli::run(argc, argv, std::cout, std::cerr); }
