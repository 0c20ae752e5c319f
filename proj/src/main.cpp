#include "delaylyap/cli.hpp"

int main(int argc, char** argv) { return delaylyap::cli_main(argc, argv); }
