// Acceptance suite: one pass/fail line per criterion. With arguments, runs
// only the listed criterion ids.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "klooster/acceptance.hpp"

int main(int argc, char** argv) {
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
    if (ids.empty()) {
        for (int id = 1; id <= klooster::acceptance::Suite::kCount; ++id) ids.push_back(id);
    }
    klooster::acceptance::Suite suite;
    bool all = true;
    for (int id : ids) {
        const auto r = suite.run(id);
        all = all && r.pass;
        std::cout << (r.pass ? "PASS" : "FAIL") << "  criterion " << r.id << ": " << r.name << " | " << r.detail
                  << " | " << r.elapsed << " s" << std::endl;
    }
    return all ? EXIT_SUCCESS : EXIT_FAILURE;
}
