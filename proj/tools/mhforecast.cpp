#include "mhforecast/harness/cli.hpp"

int main(int argc, char** argv) { return mhf::harness::cli_main(argc, argv); }
