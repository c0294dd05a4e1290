#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return wkw::cli::dispatch(argc, argv, std::cout, std::cerr); }
