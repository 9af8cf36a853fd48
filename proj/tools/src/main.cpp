#include "tubalreg_cli/commands.hpp"

int main(int argc, char** argv) { return tubalreg::cli::run_cli(argc, argv); }
