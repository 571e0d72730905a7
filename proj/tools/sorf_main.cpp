#include "sorf/cli.hpp"

int main(int argc, char** argv) { return sorf::cli_main(argc, argv); }
