#include "stratwave/cli.hpp"

int main(int argc, char** argv) { return stratwave::run_cli(argc, argv); }
