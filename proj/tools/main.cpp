#include <iostream>
#include <string>
#include <vector>

#include "cone_moduli/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cone_moduli::cli::run(args, std::cout, std::cerr);
}
