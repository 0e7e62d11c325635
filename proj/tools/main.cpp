#include "sodmv/eval.hpp"

int main(int argc, char** argv) { return sodmv::run_cli(argc, argv); }
