#include "bcops/cli.hpp"

#include <string>
#include <vector>

int main(int argc, char **argv) {
    return bcops::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
