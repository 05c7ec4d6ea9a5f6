#include <iostream>

#include "malfew/cli.hpp"

int main(int argc, char** argv) { return malfew::cli::run_cli(argc, argv, std::cout, std::cerr); }
