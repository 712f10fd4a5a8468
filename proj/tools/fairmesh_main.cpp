#include "fairmesh/cli.hpp"

int main(int argc, char **argv) { return fairmesh::cli::cli_main(argc, argv); }
