#include <iostream>

#include "llmbandit/cli.hpp"

int main(int argc, char** argv) { return llmbandit::run_cli(argc, argv, std::cout, std::cerr); }
