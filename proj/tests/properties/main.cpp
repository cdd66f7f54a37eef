#include <cstdio>

#include "properties.hpp"

int main() {
    int failed = 0;
    for (const auto& o : properties::run_all()) {
        std::printf("%s  %s  (%s)\n", o.pass ? "PASS" : "FAIL", o.name.c_str(), o.detail.c_str());
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
