#include "dryfric/cli/commands.hpp"

int main(int argc, char** argv) { return dryfric::cli::run(argc, argv); }
