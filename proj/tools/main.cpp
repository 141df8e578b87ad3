#include <iostream>

#include "strikelab/commands.hpp"

int main(int argc, char** argv) {
    return strikelab::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
