#include "spiketrain/cli.hpp"

int main(int argc, char** argv) { return spiketrain::cli::cli_main(argc, argv); }
