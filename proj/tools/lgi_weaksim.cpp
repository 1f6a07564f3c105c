#include "lgsim/cli.hpp"

int main(int argc, char** argv) { return lgsim::cli::run(argc, argv); }
