#include "cli.hpp"

int main(int argc, char** argv) { return isingrbm::cli::run(argc, argv); }
