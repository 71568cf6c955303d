#include "monoloc/cli.hpp"

int main(int argc, char** argv) { return monoloc::run_cli(argc, argv); }
