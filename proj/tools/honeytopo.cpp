#include "honeytopo/cli.hpp"

int main(int argc, char** argv) { return honeytopo::run_cli(argc, argv); }
