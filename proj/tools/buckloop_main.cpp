#include "buckloop/cli.hpp"

int main(int argc, char** argv) { return buckloop::cli_main(argc, argv); }
