#include <string>
#include <vector>

#include "graphnav/cli.hpp"

int main(int argc, char** argv) {
    return graphnav::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
