#include <iostream>
#include <string>
#include <vector>

#include "expou/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return expou::cli::run(args, std::cout, std::cerr);
}
