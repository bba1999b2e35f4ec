#include "glfm/cli.hpp"

int main(int argc, char** argv) { return glfm::run_cli(argc, argv); }
