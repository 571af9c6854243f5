#include <iostream>

#include "plab/experiment.hpp"

int main(int argc, char** argv) { return plab::cli_main(argc, argv, std::cout, std::cerr); }
