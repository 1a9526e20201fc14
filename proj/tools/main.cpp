#include <iostream>

#include "descseq/cli.h"

int main(int argc, char** argv) { return descseq::cli::run(argc, argv, std::cout, std::cerr); }
