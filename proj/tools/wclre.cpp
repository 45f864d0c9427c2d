#include "wclre/cli.hpp"

int main(int argc, char** argv) { return wclre::run(argc, argv); }
