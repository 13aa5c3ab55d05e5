#include "cli.hpp"

int main(int argc, char** argv)
{
    return scaledreg::cli::run(argc, argv);
}
