#include "mvaa/cli.h"

int main(int argc, char** argv) { return mvaa::cli::main(argc, argv); }
