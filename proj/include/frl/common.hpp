// Shared typedefs, error types and seeding utilities.
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace frl {

using std::size_t;
using numvec = std::vector<double>;
using indvec = std::vector<long>;
using sizvec = std::vector<size_t>;

/// Raised when a model or argument fails a structural precondition.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an instance exceeds a stated size limit (flatten caps, policy
/// enumeration caps and the like).
class SizeError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Raised when an iterative solver stops without meeting its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual_)
        : std::runtime_error(what), residual(residual_) {}
    double residual;
};

/// Raised when a policy evaluation is ill-posed (gain not start-state
/// independent).
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// SplitMix64 step; the basis of the documented seed-splitting rule.
inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Combines an ordered list of 64-bit words into one seed by folding each
/// word into a SplitMix64 stream. The stream state is replaced by the mixed
/// output after every fold; without that feedback, words that differ only in
/// a few low bits would collide after the final mix. Used to derive
/// independent per-run seeds from (master_seed, agent_index, sweep_index,
/// seed_index).
inline uint64_t hash64(std::initializer_list<uint64_t> parts) {
    uint64_t state = 0x8000000080001234ULL;
    uint64_t out = splitmix64(state);
    for (uint64_t p : parts) {
        state ^= p;
        out = splitmix64(state);
        state = out;
    }
    return out;
}

/// Deterministic random stream. A thin wrapper so every sampling site takes
/// the same engine type.
using Rng = std::mt19937_64;

inline Rng make_rng(uint64_t seed) { return Rng(seed); }

}  // namespace frl
