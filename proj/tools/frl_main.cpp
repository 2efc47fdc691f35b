#include <string>
#include <vector>

#include "frl/harness.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return frl::cli(args);
}
