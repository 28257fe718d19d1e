#pragma once

#include <cstdlib>
#include <string>

#include "zk/experiments.hpp"

namespace zk::test {

// One lazily built lab per test process; caches come from the environment so
// that the suites reuse the ground state and table built by the first one.
inline Lab& lab() {
    static Lab l([] {
        const char* p = std::getenv("ZK_PROFILE_CACHE");
        const char* t = std::getenv("ZK_TABLE_CACHE");
        return Lab::Paths{p ? p : "", t ? t : ""};
    }());
    return l;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace zk::test
