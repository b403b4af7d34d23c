#include "pews/cli.hpp"

int main(int argc, char** argv) { return pews::run_cli(argc, argv); }
