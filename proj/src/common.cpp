#include "oncolyap/common.hpp"

#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace oncolyap {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int effective_threads() {
#ifdef _OPENMP
    int n = omp_get_max_threads();
    if (const char* cap = std::getenv("ONCOLYAP_THREADS")) {
        const long c = std::strtol(cap, nullptr, 10);
        if (c >= 1 && c < n) n = static_cast<int>(c);
    }
    return n;
#else
    return 1;
#endif
}

} // namespace oncolyap
