#include "fstress/cli.hpp"

int main(int argc, char** argv) { return fstress::cli::run(argc, argv); }
