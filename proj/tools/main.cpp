#include <iostream>

#include "rmgan/cli/cli.hpp"
#include "rmgan/common/allocator.hpp"

int main(int argc, char** argv) {
    rmgan::tune_allocator();
    return rmgan::cli::run(argc, argv, std::cout, std::cerr);
}
