#include "opensense/cli.hpp"

int main(int argc, char** argv) { return opensense::run_cli(argc, argv); }
