#include <iostream>

#include "xfhmm_cli/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return xfhmm::cli::run(args, std::cout, std::cerr);
}
