#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) { return gexpect::main_entry(argc, argv, std::cout, std::cerr); }
