#include "afem/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return afem::run_cli(argc, argv, std::cout, std::cerr);
}
