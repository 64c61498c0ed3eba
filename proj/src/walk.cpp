#include "liedeform/walk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "liedeform/errors.hpp"

namespace liedeform {

namespace {

double re_trace(const GroupElement& g) {
    double t = 0;
    for (int b = 0; b < g.spec().num_blocks(); ++b) {
        if (g.spec().blocks()[b].kind == BlockKind::SU2)
            t += g.su2_block(b).trace().real();
        else
            t += g.real_block(b).trace();
    }
    return t;
}

// One product-replacement move.  Left: g_i <- g_j^{s} g_i; Right:
// g_i <- g_i g_j^{s}; Inv: g_i <- g_i^{-1}; Swap: exchange two entries.
struct WalkMove {
    enum class Kind { Left, Right, Inv, Swap } kind;
    int i = 0;
    int j = 0;
    bool inv = false;
};

long full_move_count(int n) {
    return 4L * n * (n - 1) + n + n * (n - 1) / 2;
}

WalkMove decode_full(long idx, int n) {
    long pairs = static_cast<long>(n) * (n - 1);
    if (idx < 4 * pairs) {
        bool right = idx >= 2 * pairs;
        long k = right ? idx - 2 * pairs : idx;
        bool inv = k % 2 == 1;
        long pair = k / 2;
        int i = static_cast<int>(pair / (n - 1));
        int j = static_cast<int>(pair % (n - 1));
        if (j >= i) ++j;
        return {right ? WalkMove::Kind::Right : WalkMove::Kind::Left, i, j,
                inv};
    }
    idx -= 4 * pairs;
    if (idx < n) return {WalkMove::Kind::Inv, static_cast<int>(idx), 0, false};
    idx -= n;
    // Unrank the swap pair i < j.
    int i = 0;
    long block = n - 1;
    while (idx >= block) {
        idx -= block;
        --block;
        ++i;
    }
    return {WalkMove::Kind::Swap, i, static_cast<int>(i + 1 + idx), false};
}

std::vector<WalkMove> restricted_moves(int n) {
    if (n < 3)
        throw InputError("walk: the restricted move set needs n >= 3");
    return {{WalkMove::Kind::Left, 0, 1, false},
            {WalkMove::Kind::Left, 0, 1, true},
            {WalkMove::Kind::Left, 0, 2, false},
            {WalkMove::Kind::Left, 0, 2, true}};
}

void apply_walk_move(std::vector<GroupElement>& t, const WalkMove& m) {
    switch (m.kind) {
        case WalkMove::Kind::Left:
            t[m.i] = m.inv ? multiply(inverse(t[m.j]), t[m.i])
                           : multiply(t[m.j], t[m.i]);
            break;
        case WalkMove::Kind::Right:
            t[m.i] = m.inv ? multiply(t[m.i], inverse(t[m.j]))
                           : multiply(t[m.i], t[m.j]);
            break;
        case WalkMove::Kind::Inv:
            t[m.i] = inverse(t[m.i]);
            break;
        case WalkMove::Kind::Swap:
            std::swap(t[m.i], t[m.j]);
            break;
    }
}

bool nontorsion_factors(const GroupElement& g, long qmax,
                        const Thresholds& thr) {
    for (int f = 0; f < g.spec().num_factors(); ++f)
        if (torsion_order(project_to_factor(g, f), static_cast<int>(qmax), thr)
                .is_torsion)
            return false;
    return true;
}

}  // namespace

bool y_membership(const std::vector<GroupElement>& tuple, long qmax,
                  const Thresholds& thr) {
    if (tuple.size() < 3)
        throw InputError("y_membership: need at least three entries");
    if (tuple[0].spec().has_torus())
        throw InputError("y_membership: spec must be semisimple");
    for (const GroupElement& g : tuple)
        if (!nontorsion_factors(g, qmax, thr)) return false;
    return omega_tilde_test(tuple, thr);
}

WalkStats run_walk(const WalkConfig& cfg, const std::vector<GroupElement>& start,
                   std::vector<std::string>* csv_rows) {
    if (!cfg.spec) throw InputError("walk: missing group spec");
    if (static_cast<int>(start.size()) != cfg.n)
        throw InputError("walk: start tuple size differs from n");
    if (cfg.n < 2) throw InputError("walk: need at least two entries");
    for (const GroupElement& g : start)
        require_same_spec(g.spec(), *cfg.spec, "walk");
    if (cfg.steps < 0 || cfg.burn_in < 0 || cfg.thinning < 1)
        throw InputError("walk: bad step counts");
    if (cfg.burn_in >= cfg.steps && cfg.steps > 0)
        throw InputError("walk: burn-in must be smaller than steps");

    const int n = cfg.n;
    const long npairs = static_cast<long>(n) * (n - 1) / 2;
    WalkStats st;
    st.steps = cfg.steps;
    st.burn_in = cfg.burn_in;
    st.thinning = cfg.thinning;
    st.seed = cfg.seed;
    st.mean_trace.assign(n, 0.0);
    st.mean_trace_sq.assign(n, 0.0);
    st.mean_pair.assign(npairs, 0.0);

    const bool y_defined = cfg.spec->semisimple() && n >= 3;
    st.start_in_y = y_defined && y_membership(start, cfg.qmax);

    std::vector<WalkMove> restricted;
    if (cfg.move_set == MoveSet::RestrictedL21L31)
        restricted = restricted_moves(n);
    const long nmoves = cfg.move_set == MoveSet::Full
                            ? full_move_count(n)
                            : static_cast<long>(restricted.size());

    Rng rng(cfg.seed);
    std::vector<GroupElement> tuple = start;
    for (long step = 1; step <= cfg.steps; ++step) {
        long pick = rng.below(nmoves);
        WalkMove mv = cfg.move_set == MoveSet::Full
                          ? decode_full(pick, n)
                          : restricted[static_cast<size_t>(pick)];
        apply_walk_move(tuple, mv);
        if (step > cfg.burn_in && (step - cfg.burn_in) % cfg.thinning == 0) {
            ++st.samples;
            std::string row;
            if (csv_rows) row = std::to_string(step);
            for (int i = 0; i < n; ++i) {
                double t = re_trace(tuple[i]);
                st.mean_trace[i] += t;
                st.mean_trace_sq[i] += t * t;
                if (csv_rows) {
                    char buf[32];
                    std::snprintf(buf, sizeof buf, ",%.12g", t);
                    row += buf;
                }
            }
            int at = 0;
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    double t = re_trace(multiply(tuple[i], tuple[j]));
                    st.mean_pair[at++] += t;
                    if (csv_rows) {
                        char buf[32];
                        std::snprintf(buf, sizeof buf, ",%.12g", t);
                        row += buf;
                    }
                }
            if (csv_rows) csv_rows->push_back(std::move(row));
        }
    }
    if (st.samples > 0) {
        for (double& x : st.mean_trace) x /= st.samples;
        for (double& x : st.mean_trace_sq) x /= st.samples;
        for (double& x : st.mean_pair) x /= st.samples;
    }
    st.final_tuple = tuple;
    st.final_in_y = y_defined && y_membership(tuple, cfg.qmax);
    return st;
}

std::vector<double> orbit_density_probe(
    const std::vector<GroupElement>& start,
    const std::vector<std::vector<GroupElement>>& targets, long steps,
    std::uint64_t seed, long qmax, const Thresholds& thr) {
    (void)qmax;
    (void)thr;
    if (start.size() < 2)
        throw InputError("orbit probe: need at least two entries");
    const int n = static_cast<int>(start.size());
    for (const auto& t : targets)
        if (t.size() != start.size())
            throw InputError("orbit probe: target tuple size mismatch");

    auto max_dist = [&](const std::vector<GroupElement>& tuple,
                        const std::vector<GroupElement>& tgt) {
        double worst = 0;
        for (size_t i = 0; i < tuple.size(); ++i)
            worst = std::max(worst, distance(tuple[i], tgt[i]));
        return worst;
    };

    std::vector<double> best(targets.size(),
                             std::numeric_limits<double>::infinity());
    const long nmoves = full_move_count(n);

    // Shared random exploration.
    {
        Rng rng(seed);
        std::vector<GroupElement> tuple = start;
        for (size_t t = 0; t < targets.size(); ++t)
            best[t] = max_dist(tuple, targets[t]);
        for (long s = 0; s < steps; ++s) {
            apply_walk_move(tuple, decode_full(rng.below(nmoves), n));
            for (size_t t = 0; t < targets.size(); ++t)
                best[t] = std::min(best[t], max_dist(tuple, targets[t]));
        }
    }

    // Greedy descent per target, random tie-breaks.
    for (size_t t = 0; t < targets.size(); ++t) {
        Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * (t + 1)));
        std::vector<GroupElement> tuple = start;
        double cur = max_dist(tuple, targets[t]);
        best[t] = std::min(best[t], cur);
        for (long s = 0; s < steps; ++s) {
            double pick_val = std::numeric_limits<double>::infinity();
            std::vector<GroupElement> pick;
            int ties = 0;
            for (long m = 0; m < nmoves; ++m) {
                std::vector<GroupElement> cand = tuple;
                apply_walk_move(cand, decode_full(m, n));
                double d = max_dist(cand, targets[t]);
                if (d < pick_val - 1e-12) {
                    pick_val = d;
                    pick = std::move(cand);
                    ties = 1;
                } else if (d < pick_val + 1e-12 && ties > 0 &&
                           rng.below(++ties) == 0) {
                    pick = std::move(cand);
                }
            }
            tuple = std::move(pick);
            cur = pick_val;
            best[t] = std::min(best[t], cur);
        }
    }
    return best;
}

}  // namespace liedeform
