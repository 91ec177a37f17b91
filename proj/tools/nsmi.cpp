#include <iostream>
#include <string>
#include <vector>

#include "nsmi/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return nsmi::cli::run(args, std::cout, std::cerr);
}
