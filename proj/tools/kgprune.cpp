#include "kgprune/cli.hpp"

int main(int argc, char** argv) { return kgprune::cli::run(argc, argv); }
