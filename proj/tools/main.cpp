#include "commands.hpp"

int main(int argc, char** argv) {
    return deflect::cli::run(argc, argv);
}
