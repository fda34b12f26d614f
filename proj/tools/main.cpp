#include "motorsig/cli.hpp"

int main(int argc, char** argv) { return motorsig::cli::run(argc, argv); }
