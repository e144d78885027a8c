#include "genspec/cli.hpp"

int main(int argc, char** argv) { return genspec::cli::run(argc, argv); }
