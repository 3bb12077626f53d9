#include "commands.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return choquard::cli::run_cli(argc, argv, std::cerr);
}
