#include "prefcon/cli.hpp"

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char ** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    return prefcon::cli::run(std::move(args), std::cout, std::cerr);
}
