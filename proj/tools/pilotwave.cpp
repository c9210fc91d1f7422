#include "pilotwave/cli.hpp"

int main(int argc, char** argv) { return pilotwave::cli::run_command(argc, argv); }
