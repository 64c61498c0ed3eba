#pragma once

#include <cstdint>
#include <vector>

#include "liedeform/algebra.hpp"
#include "liedeform/config.hpp"
#include "liedeform/group.hpp"
#include "liedeform/rng.hpp"

namespace liedeform {

// True iff every (n-1)-subtuple generates the full adjoint algebra and
// every entry has non-torsion projection to every simple factor (up to
// qmax).  Requires a semisimple spec and n >= 3.
bool y_membership(const std::vector<GroupElement>& tuple, long qmax,
                  const Thresholds& thr = {});

enum class MoveSet {
    Full,              // left/right single-letter multiplications, inversions, swaps
    RestrictedL21L31,  // left multiplication of entry 1 by entry 2 or 3 only
};

struct WalkConfig {
    const GroupSpec* spec = nullptr;
    int n = 3;
    long steps = 0;
    long burn_in = 0;   // defaulted to steps/10 by the CLI when unset
    long thinning = 10;
    std::uint64_t seed = 0;
    MoveSet move_set = MoveSet::Full;
    long qmax = 200;
};

struct WalkStats {
    long steps = 0;
    long burn_in = 0;
    long thinning = 10;
    long samples = 0;
    std::uint64_t seed = 0;
    bool start_in_y = false;
    bool final_in_y = false;
    std::vector<double> mean_trace;     // per coordinate
    std::vector<double> mean_trace_sq;  // per coordinate
    std::vector<double> mean_pair;      // Re tr(g_i g_j), pairs i<j row-major
    std::vector<GroupElement> final_tuple;
};

// Random product-replacement walk on G^n accumulating trace-moment
// statistics every `thinning` steps after burn-in.  Deterministic in the
// seed.  Optionally appends one CSV row per retained sample to `csv_rows`.
WalkStats run_walk(const WalkConfig& cfg, const std::vector<GroupElement>& start,
                   std::vector<std::string>* csv_rows = nullptr);

// For each target tuple: the best max-coordinate distance reached along a
// random walk of `steps` moves, and along a greedy variant that picks the
// distance-minimizing move each step; the smaller of the two is reported.
std::vector<double> orbit_density_probe(
    const std::vector<GroupElement>& start,
    const std::vector<std::vector<GroupElement>>& targets, long steps,
    std::uint64_t seed, long qmax = 200, const Thresholds& thr = {});

}  // namespace liedeform
