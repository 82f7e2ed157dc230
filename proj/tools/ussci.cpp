#include "ussci/pipeline/cli.hpp"

int main(int argc, char** argv) { return ussci::cli_dispatch(argc, argv); }
