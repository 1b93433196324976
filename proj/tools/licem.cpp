#include "licem/cli.hpp"

int main(int argc, char** argv) {
    return licem::run_cli(argc, argv);
}
