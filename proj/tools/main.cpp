#include <iostream>
#include <string>
#include <vector>

#include "sqform/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return sqform::run_cli(args, std::cout, std::cerr);
}
