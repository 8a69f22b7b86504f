#include "fnnforge/commands.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return fnnforge::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
