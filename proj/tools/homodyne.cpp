#include <iostream>
#include <string>
#include <vector>

#include "homodyne/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        const auto cfg = homodyne::cli::parse_config(args);
        return homodyne::cli::run(cfg);
    } catch (const homodyne::cli::ConfigError& e) {
        (e.exit_code() == 0 ? std::cout : std::cerr) << e.what() << '\n';
        return e.exit_code();
    }
}
