#include "hazelab/cli.hpp"

int main(int argc, char** argv) {
    return hazelab::run_cli(argc, argv);
}
