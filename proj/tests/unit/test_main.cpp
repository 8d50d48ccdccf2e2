#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"
#include "rmgan/common/allocator.hpp"

int main(int argc, char** argv) {
    rmgan::tune_allocator();
    return doctest::Context(argc, argv).run();
}
