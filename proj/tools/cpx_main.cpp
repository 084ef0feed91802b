#include <iostream>

#include "cpx/cli.hpp"

int main(int argc, char** argv) {
    return cpx::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
