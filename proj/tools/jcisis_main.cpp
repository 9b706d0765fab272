#include <iostream>
#include <string>
#include <vector>

#include "cli.hpp"

int main(int argc, char** argv) {
    std::ios::sync_with_stdio(false);
    std::vector<std::string> args(argv + 1, argv + argc);
    const int code = jcisis::cli::run_cli(args, std::cout, std::cerr);
    std::cout.flush();
    if (!std::cout) return code == 0 ? jcisis::cli::kIoFailure : code;
    return code;
}
