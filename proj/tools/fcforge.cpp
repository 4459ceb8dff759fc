#include <iostream>

#include "fcforge/cli.hpp"

int main(int argc, char** argv) {
    return fcforge::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
