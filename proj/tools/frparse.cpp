#include "frparse/cli.hpp"

int main(int argc, char** argv) { return frparse::cli::main_entry(argc, argv); }
