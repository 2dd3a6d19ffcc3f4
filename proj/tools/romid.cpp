#include "romid/cli.hpp"

int main(int argc, char** argv) { return romid::cli::run_cli(argc, argv); }
