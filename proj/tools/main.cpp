#include "gpscan/cli.hpp"

int main(int argc, char** argv) { return gpscan::cli_main(argc, argv); }
