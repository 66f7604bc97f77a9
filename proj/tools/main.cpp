#include <vector>

#include "emgsnn/cli.hpp"

int main(int argc, char** argv) {
    return emgsnn::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
