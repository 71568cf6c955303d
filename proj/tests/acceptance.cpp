#include <cstdlib>
#include <iostream>

#include "monoloc/acceptance.hpp"

int main(int argc, char** argv) {
    std::uint64_t seed = 1;
    if (argc > 1) seed = std::strtoull(argv[1], nullptr, 10);
    const auto results = monoloc::run_acceptance(seed, &std::cout);
    int failed = 0;
    for (const auto& r : results)
        if (!r.pass) ++failed;
    if (failed) std::cout << failed << " criteria failed\n";
    return failed ? 1 : 0;
}
