#include "svc/cli.hpp"

int main(int argc, char** argv) { return svc::cli_main(argc, argv); }
