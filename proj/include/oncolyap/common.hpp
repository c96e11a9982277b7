#ifndef ONCOLYAP_COMMON_HPP
#define ONCOLYAP_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace oncolyap {

// Error hierarchy. The CLI maps these onto exit codes: DomainError -> 2,
// NumericError -> 3, SolverError -> 4.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

class SolverError : public Error {
public:
    explicit SolverError(const std::string& msg) : Error(msg) {}
};

class SingularMatrixError : public NumericError {
public:
    explicit SingularMatrixError(const std::string& msg) : NumericError(msg) {}
};

// Axis-aligned box in state space.
struct Box3 {
    Eigen::Vector3d lo{0, 0, 0};
    Eigen::Vector3d hi{0, 0, 0};

    bool contains(const Eigen::Vector3d& x) const {
        return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
    }
    Eigen::Vector3d center() const { return 0.5 * (lo + hi); }
    double diameter() const { return (hi - lo).norm(); }
    bool empty() const { return (hi.array() < lo.array()).any(); }
};

// Deterministic uniform doubles on top of a 64-bit generator. Distributions
// from <random> are implementation defined; this keeps outputs reproducible
// byte for byte for a fixed seed.
class UniformRng {
public:
    explicit UniformRng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64() {
        // xorshift64* generator
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dull;
    }

    // uniform in [0,1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * next_double(); }

    Eigen::Vector3d point_in(const Box3& box) {
        return {uniform(box.lo.x(), box.hi.x()), uniform(box.lo.y(), box.hi.y()),
                uniform(box.lo.z(), box.hi.z())};
    }

    // derive an independent substream; used to give parallel workers stable seeds
    std::uint64_t derive(std::uint64_t salt) const {
        std::uint64_t z = state_ + 0x9e3779b97f4a7c15ull * (salt + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// Render a double with 17 significant digits (lossless decimal round trip).
std::string fmt17(double v);

// Worker count for OpenMP regions, capped by the ONCOLYAP_THREADS env var.
int effective_threads();

} // namespace oncolyap

#endif
