#include "ipk/cli.hpp"

int main(int argc, char** argv) { return ipk::cli::run(argc, argv); }
