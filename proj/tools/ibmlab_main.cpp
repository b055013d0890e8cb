#include "ibmlab/cli.hpp"

int main(int argc, char** argv) { return ibmlab::cli::main_entry(argc, argv); }
