#include "mapvol/cli.hpp"

int main(int argc, char** argv) { return mapvol::run_cli(argc, argv); }
