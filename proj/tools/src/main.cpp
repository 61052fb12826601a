#include "flcrmf_cli/commands.hpp"

int main(int argc, char** argv) { return flcrmf::cli::run_cli(argc, argv); }
