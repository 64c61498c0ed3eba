#pragma once

#include <stdexcept>
#include <string>

namespace liedeform {

// Base class for all library failures so callers can catch one type.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user input: malformed spec strings, mismatched specs, non-orthogonal
// matrices, out-of-range indices.  Maps to CLI exit code 1.
struct InputError : Error {
    explicit InputError(const std::string& msg) : Error(msg) {}
};

// log_map at or too near the cut locus (an eigenangle within tau_cut of pi).
struct CutLocusError : Error {
    explicit CutLocusError(const std::string& msg) : Error(msg) {}
};

// A search ran out of its word-length / retry budget.  `best` carries the
// best distance reached so the caller can report how close it got.
struct BudgetExhausted : Error {
    std::string phase;
    double best;
    BudgetExhausted(std::string ph, double b)
        : Error("budget exhausted in phase '" + ph + "', best distance " +
                std::to_string(b)),
          phase(std::move(ph)),
          best(b) {}
};

// A required density / regularity certificate could not be established.
struct CertificationFailed : Error {
    explicit CertificationFailed(const std::string& msg) : Error(msg) {}
};

// build_net hit the word-length cap before Monte Carlo coverage passed.
struct NetUnreachable : Error {
    int length_cap;
    NetUnreachable(const std::string& msg, int cap)
        : Error(msg), length_cap(cap) {}
};

// Certificate replay diverged from the recorded final tuple.
struct ReplayMismatch : Error {
    int entry_index;  // first tuple entry whose replayed value is off
    double residual;
    ReplayMismatch(int idx, double res)
        : Error("replay mismatch at entry " + std::to_string(idx) +
                ", residual " + std::to_string(res)),
          entry_index(idx),
          residual(res) {}
};

// Newton iteration on conjugacy classes failed to reach tau_newton.
struct NoConvergence : Error {
    int iterations;
    double residual;
    NoConvergence(int it, double res)
        : Error("no convergence after " + std::to_string(it) +
                " iterations, residual " + std::to_string(res)),
          iterations(it),
          residual(res) {}
};

// Requested torsion target is out of reach for the allowed conjugator size.
struct TargetTooFar : Error {
    explicit TargetTooFar(const std::string& msg) : Error(msg) {}
};

// epsilon is below the rational-angle projection bound achievable at qmax.
struct QmaxTooSmall : Error {
    explicit QmaxTooSmall(const std::string& msg) : Error(msg) {}
};

}  // namespace liedeform
