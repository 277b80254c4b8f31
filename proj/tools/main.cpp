#include <iostream>

#include "active_eval/cli.hpp"

int main(int argc, char** argv) { return active_eval::cli::run(argc, argv, std::cout, std::cerr); }
