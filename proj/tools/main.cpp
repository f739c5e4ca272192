#include "regbench/cli.hpp"

int main(int argc, char** argv) { return regbench::run_cli(argc, argv); }
