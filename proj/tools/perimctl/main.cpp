#include "perim/cli.hpp"

int main(int argc, char** argv) { return perim::run_cli(argc, argv); }
