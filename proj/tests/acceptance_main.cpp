#include "acceptance.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>

int main(int argc, char** argv) {
    oledmag::AcceptanceOptions options;
    for (int k = 1; k < argc; ++k) options.only.push_back(std::atoi(argv[k]));
    int failed = 0;
    oledmag::run_acceptance(options, [&](const oledmag::CriterionResult& r) {
        std::printf("[%s] %2d %-28s %7.2fs  %s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds,
                    r.detail.c_str());
        std::fflush(stdout);
        if (!r.pass) ++failed;
    });
    std::printf("%d criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
