#include <iostream>

#include "dsagent/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dsagent::run_cli(args, std::cout, std::cerr);
}
