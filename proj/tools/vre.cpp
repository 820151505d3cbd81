#include "vre/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
   return vre::cli::run(argc, argv, std::cout, std::cerr);
}
