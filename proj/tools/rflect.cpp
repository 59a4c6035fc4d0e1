#include <iostream>

#include "rflect/commands.hpp"

int main(int argc, char** argv) { return rflect::run_cli(argc, argv, std::cout, std::cerr); }
