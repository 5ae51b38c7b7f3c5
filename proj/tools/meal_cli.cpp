#include <iostream>
#include <string>
#include <vector>

#include "meal/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return meal::run_cli(args, std::cout, std::cerr);
}
