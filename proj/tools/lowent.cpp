#include <iostream>
#include <string>
#include <vector>

#include "lowent/cli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    const auto result = lowent::cli::run(args);
    std::cout << result.output << std::flush;
    std::cerr << result.diagnostics;
    return result.exit_code;
}
