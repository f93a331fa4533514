#include "finfuel/cli.hpp"

int main(int argc, char** argv) { return finfuel::run_cli(argc, argv); }
