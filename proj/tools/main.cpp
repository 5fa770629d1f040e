#include <iostream>

#include "roomfuse/cli.hpp"

int main(int argc, char** argv) {
    return roomfuse::run_cli(argc, argv, std::cout, std::cerr);
}
