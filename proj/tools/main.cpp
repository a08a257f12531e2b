#include "cli.hpp"

int main(int argc, char** argv) { return xprec::cli::run(argc, argv); }
