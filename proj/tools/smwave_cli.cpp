#include <string>
#include <vector>

#include "smwave/cli/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return smwave::cli::run(args);
}
