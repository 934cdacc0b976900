#include "e3d/cli.hpp"

int main(int argc, char** argv) { return e3d::cli_main(argc, argv); }
