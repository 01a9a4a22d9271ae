#include <iostream>

#include "lmstat/cli.hpp"

int main(int argc, char** argv) { return lmstat::cli::dispatch(argc, argv, std::cout, std::cerr); }
