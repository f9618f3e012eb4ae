#include "shells/cli.hpp"

int main(int argc, char** argv) { return shells::run_cli(argc, argv); }
