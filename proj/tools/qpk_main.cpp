#include "qpk/harness.hpp"

int main(int argc, char** argv) { return qpk::harness::cli(argc, argv); }
