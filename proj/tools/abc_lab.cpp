#include "abc/harness.hpp"

int main(int argc, char** argv) { return abc::harness::run(argc, argv); }
