#include "cli.hpp"

int main(int argc, char** argv) { return spar::cli::run(argc, argv); }
