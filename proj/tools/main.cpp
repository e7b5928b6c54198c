#include "commands.hpp"

int main(int argc, char** argv) { return basofr::cli::run(argc, argv); }
