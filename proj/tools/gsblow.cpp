#include "gsblow/cli.hpp"

int main(int argc, char** argv) { return gsblow::cli::run(argc, argv); }
