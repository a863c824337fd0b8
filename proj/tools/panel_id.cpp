#include "panelid/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return panelid::run_cli(argc, argv, std::cout, std::cerr); }
