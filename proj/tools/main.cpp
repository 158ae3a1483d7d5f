#include "hdk/cli.hpp"

int main(int argc, char** argv) { return hdk::cli_main(argc, argv); }
