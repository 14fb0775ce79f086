#include "csifb/harness/cli.hpp"

int main(int argc, char** argv) { return csifb::cli_dispatch(argc, argv); }
