#include "cli.hpp"

int main(int argc, char** argv) { return mmkit::cli::run(argc, argv); }
