#include "mgsos/cli.hpp"

int main(int argc, char** argv) { return mgsos::run_cli(argc, argv); }
