#include "chromacode/cli.hpp"

int main(int argc, char** argv) { return chromacode::cli::run(argc, argv); }
