#include <iostream>

#include "ltviqc/cli.hpp"

int main(int argc, char** argv) { return ltviqc::cli::run(argc, argv, std::cout, std::cerr); }
