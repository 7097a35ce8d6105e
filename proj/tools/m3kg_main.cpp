#include <iostream>
#include <string>
#include <vector>

#include "m3kg/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return m3kg::cli::run(args, std::cout, std::cerr);
}
