#include "phmg/cli.hpp"

int main(int argc, char** argv) { return phmg::run_cli(argc, argv); }
