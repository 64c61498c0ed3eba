#include "liedeform/nielsen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "liedeform/errors.hpp"
#include "liedeform/relations.hpp"

namespace liedeform {

Move left_multiply_move(int target, const Word& multiplier) {
    Move m;
    m.kind = Move::Kind::LeftMultiply;
    m.target = target;
    m.multiplier = multiplier;
    return m;
}

Move invert_move(int index) {
    Move m;
    m.kind = Move::Kind::InvertEntry;
    m.target = index;
    return m;
}

Move swap_move(int i, int j) {
    Move m;
    m.kind = Move::Kind::SwapEntries;
    m.target = i;
    m.other = j;
    return m;
}

namespace {

void check_move(const Move& m, int n) {
    if (m.target < 0 || m.target >= n)
        throw InputError("move: target entry out of range");
    switch (m.kind) {
        case Move::Kind::LeftMultiply:
            if (m.multiplier.rank() != n)
                throw InputError("move: multiplier rank must equal tuple size");
            for (int l : m.multiplier.letters())
                if (std::abs(l) - 1 == m.target)
                    throw InputError("move: multiplier uses the replaced entry");
            break;
        case Move::Kind::InvertEntry:
            break;
        case Move::Kind::SwapEntries:
            if (m.other < 0 || m.other >= n || m.other == m.target)
                throw InputError("move: swap needs two distinct entries");
            break;
    }
}

}  // namespace

std::vector<GroupElement> apply_move(const std::vector<GroupElement>& tuple,
                                     const Move& m) {
    check_move(m, static_cast<int>(tuple.size()));
    std::vector<GroupElement> out = tuple;
    switch (m.kind) {
        case Move::Kind::LeftMultiply:
            out[m.target] =
                multiply(evaluate(m.multiplier, tuple), tuple[m.target]);
            break;
        case Move::Kind::InvertEntry:
            out[m.target] = inverse(tuple[m.target]);
            break;
        case Move::Kind::SwapEntries:
            std::swap(out[m.target], out[m.other]);
            break;
    }
    return out;
}

Move inverse_move(const Move& m) {
    // The multiplier never reads the replaced entry, so it evaluates to the
    // same element before and after the move; undoing is left-multiplying
    // by its inverse.
    switch (m.kind) {
        case Move::Kind::LeftMultiply:
            return left_multiply_move(m.target, m.multiplier.inverse());
        case Move::Kind::InvertEntry:
        case Move::Kind::SwapEntries:
            return m;
    }
    throw InputError("move: unknown kind");
}

std::vector<GroupElement> replay(const MoveCertificate& cert,
                                 const Thresholds& thr) {
    const int n = static_cast<int>(cert.initial.size());
    if (n == 0) throw InputError("replay: empty initial tuple");
    if (cert.final_tuple.size() != cert.initial.size())
        throw InputError("replay: final tuple size mismatch");
    std::vector<GroupElement> tuple = cert.initial;
    for (const Move& m : cert.moves) tuple = apply_move(tuple, m);
    const double tol =
        thr.tau_replay * std::max<size_t>(1, cert.moves.size());
    for (int j = 0; j < n; ++j) {
        double res = distance(tuple[j], cert.final_tuple[j]);
        if (res > tol) throw ReplayMismatch(j, res);
    }
    return tuple;
}

std::vector<Word> symbolic_words(const MoveCertificate& cert) {
    const int n = static_cast<int>(cert.initial.size());
    std::vector<Word> words;
    words.reserve(n);
    for (int i = 0; i < n; ++i)
        words.push_back(Word::from_letters(n, {i + 1}));
    for (const Move& m : cert.moves) {
        check_move(m, n);
        switch (m.kind) {
            case Move::Kind::LeftMultiply:
                words[m.target] =
                    m.multiplier.substitute(words).concat(words[m.target]);
                break;
            case Move::Kind::InvertEntry:
                words[m.target] = words[m.target].inverse();
                break;
            case Move::Kind::SwapEntries:
                std::swap(words[m.target], words[m.other]);
                break;
        }
    }
    return words;
}

namespace {

int validate_problem(const DeformationProblem& p, bool allow_torus,
                     const char* where) {
    if (!p.spec) throw InputError(std::string(where) + ": missing group spec");
    const int n = static_cast<int>(p.targets.size());
    if (n < 3)
        throw InputError(std::string(where) + ": need at least three targets");
    if (p.gamma.size() + 1 != p.targets.size())
        throw InputError(std::string(where) +
                         ": generator count must be one less than targets");
    for (const GroupElement& t : p.targets)
        require_same_spec(t.spec(), *p.spec, where);
    for (const GroupElement& g : p.gamma)
        require_same_spec(g.spec(), *p.spec, where);
    if (!(p.epsilon > 0))
        throw InputError(std::string(where) + ": epsilon must be positive");
    if (p.qmax < 2)
        throw InputError(std::string(where) + ": qmax must be at least 2");
    if (!allow_torus && p.spec->has_torus())
        throw InputError(std::string(where) +
                         ": torus blocks need the general algorithm");
    return n;
}

// Longest steering word we allow at a given alphabet size; beyond rank 2 the
// meet-in-the-middle tables grow too fast for longer words to pay off.
int steer_cap(int rank, const Budgets& budgets) {
    int hard = rank <= 2 ? 16 : 12;
    return std::min(budgets.steer_len, hard);
}

struct Steerer {
    const DeformationProblem& p;
    std::vector<GroupElement>& tuple;
    std::vector<Move>& moves;

    // Left-multiplies tuple[entry] with a word over tuple[helper_idx...] so
    // it lands within eps of target, subject to `accept` on the new value.
    // Tries the best candidates at each length rung before growing.
    void steer(int entry, const std::vector<int>& helper_idx,
               const GroupElement& target, double eps,
               const std::function<bool(const GroupElement&)>& accept,
               int num_candidates, const std::string& phase) {
        const int n = static_cast<int>(tuple.size());
        std::vector<GroupElement> helpers;
        helpers.reserve(helper_idx.size());
        for (int i : helper_idx) helpers.push_back(tuple[i]);
        GroupElement mult_target =
            multiply(target, inverse(tuple[entry]));
        const int cap = steer_cap(static_cast<int>(helpers.size()), p.budgets);
        int start = std::min(p.budgets.steer_start_len, cap);
        double best = std::numeric_limits<double>::infinity();
        for (int len = start;; len += 2) {
            auto cands = steer_candidates(helpers, mult_target, len,
                                          num_candidates, p.budgets);
            for (const SteerResult& c : cands) {
                best = std::min(best, c.dist);
                if (c.dist >= eps) break;  // sorted ascending
                GroupElement value = evaluate(c.word, helpers);
                GroupElement moved = multiply(value, tuple[entry]);
                if (!accept(moved)) continue;
                if (!c.word.empty()) {
                    Move mv =
                        left_multiply_move(entry, c.word.remap(n, helper_idx));
                    tuple = apply_move(tuple, mv);
                    moves.push_back(mv);
                }
                return;
            }
            if (len >= cap) break;
        }
        throw BudgetExhausted(phase, best);
    }
};

bool nontorsion_per_factor(const GroupElement& g, long qmax,
                           const Thresholds& thr) {
    for (int f = 0; f < g.spec().num_factors(); ++f) {
        GroupElement proj = project_to_factor(g, f);
        if (torsion_order(proj, static_cast<int>(qmax), thr).is_torsion)
            return false;
    }
    return true;
}

bool torus_part_dense(const GroupElement& g, long qmax,
                      const Thresholds& thr) {
    if (!g.spec().has_torus()) return true;
    auto angles = torus_block_angles(g);
    return !find_integer_relation(angles, qmax, thr.tau_rel).relation_found;
}

}  // namespace

DeformationResult deform_to_generate(const DeformationProblem& p) {
    const int n = validate_problem(p, /*allow_torus=*/false, "deform");
    const Thresholds& thr = p.thresholds;
    const Budgets& bud = p.budgets;

    DensityCertificate pre =
        dense_tuple_certificate(p.gamma, p.qmax, thr, bud);
    if (!pre.all_true())
        throw CertificationFailed("deform: input generators are not certified dense");

    // Install an extra generator as a short word in the given ones.  The
    // extended tuple must keep generating the full adjoint algebra after
    // deleting any single entry, so each later entry swap stays safe.
    Word install{n - 1};
    GroupElement installed = GroupElement::identity(p.gamma[0].spec_ptr());
    bool found = false;
    for_each_word_value(
        p.gamma, 1, bud.install_word_len,
        [&](const Word& w, const GroupElement& v) {
            std::vector<GroupElement> extended = p.gamma;
            extended.push_back(v);
            if (!nontorsion_per_factor(v, p.qmax, thr)) return true;
            if (!omega_tilde_test(extended, thr)) return true;
            install = w;
            installed = v;
            found = true;
            return false;
        });
    if (!found)
        throw BudgetExhausted("install word for the extra generator",
                              std::numeric_limits<double>::infinity());

    MoveCertificate cert;
    cert.initial = p.gamma;
    cert.initial.push_back(installed);
    for (int i = 0; i < n - 1; ++i)
        cert.provenance.push_back(Word::from_letters(n - 1, {i + 1}));
    cert.provenance.push_back(install);
    cert.seed = p.seed;
    cert.qmax = p.qmax;
    cert.epsilon = p.epsilon;
    cert.budgets = bud;

    std::vector<GroupElement> tuple = cert.initial;
    Steerer st{p, tuple, cert.moves};

    // Entry 1 first, steered over everything else; the accepted value must
    // keep the remaining helpers algebra-generating for the next phase.
    std::vector<int> all_but_first;
    for (int i = 1; i < n; ++i) all_but_first.push_back(i);
    std::vector<GroupElement> rest(tuple.begin() + 2, tuple.end());
    st.steer(
        0, all_but_first, p.targets[0], p.epsilon,
        [&](const GroupElement& g) {
            return nontorsion_per_factor(g, p.qmax, thr) &&
                   omega_test(g, rest, thr);
        },
        bud.steer_candidates, "steer entry 1");

    // Entry 2, steered over entry 1 and the untouched tail; the first two
    // entries must come out certified dense, which carries the whole tuple.
    std::vector<int> helpers2;
    helpers2.push_back(0);
    for (int i = 2; i < n; ++i) helpers2.push_back(i);
    st.steer(
        1, helpers2, p.targets[1], p.epsilon,
        [&](const GroupElement& g) {
            return dense_tuple_certificate({tuple[0], g}, p.qmax, thr, bud)
                .all_true();
        },
        bud.steer_candidates, "steer entry 2");

    // Remaining entries only need distance; words over the certified pair.
    for (int j = 2; j < n; ++j)
        st.steer(
            j, {0, 1}, p.targets[j], p.epsilon,
            [](const GroupElement&) { return true; }, 1,
            "steer entry " + std::to_string(j + 1));

    cert.final_tuple = tuple;
    DeformationResult res;
    res.tuple = tuple;
    res.certificate = std::move(cert);
    return res;
}

DeformationResult general_deform(const DeformationProblem& p) {
    const int n = validate_problem(p, /*allow_torus=*/true, "deform");
    const Thresholds& thr = p.thresholds;
    const Budgets& bud = p.budgets;
    const SpecPtr spec = p.gamma[0].spec_ptr();

    DensityCertificate pre =
        dense_tuple_certificate(p.gamma, p.qmax, thr, bud);
    if (!pre.all_true())
        throw CertificationFailed("deform: input generators are not certified dense");

    // The middle generators stay in every steering alphabet.
    std::vector<GroupElement> middles(p.gamma.begin() + 1, p.gamma.end());

    // Phase 1: a word value near the last target whose conjunction with the
    // middle generators satisfies the density side conditions.
    const double half = p.epsilon / 2;
    auto last_ok = [&](const GroupElement& v) {
        if (!nontorsion_per_factor(v, p.qmax, thr)) return false;
        if (!torus_part_dense(v, p.qmax, thr)) return false;
        if (spec->num_factors() > 0 && !omega_test(v, middles, thr))
            return false;
        return true;
    };
    const int rank1 = n - 1;
    const int cap1 = steer_cap(rank1, bud);
    Word last_word{rank1};
    GroupElement last = GroupElement::identity(spec);
    {
        bool found = false;
        double best = std::numeric_limits<double>::infinity();
        for (int len = std::min(bud.steer_start_len, cap1); !found;
             len += 2) {
            auto cands = steer_candidates(p.gamma, p.targets[n - 1], len,
                                          bud.steer_candidates, bud);
            for (const SteerResult& c : cands) {
                best = std::min(best, c.dist);
                if (c.dist >= half) break;
                GroupElement v = evaluate(c.word, p.gamma);
                if (!last_ok(v)) continue;
                last_word = c.word;
                last = v;
                found = true;
                break;
            }
            if (!found && len >= cap1) throw BudgetExhausted("steer last entry", best);
        }
    }

    MoveCertificate cert;
    cert.initial = p.gamma;
    cert.initial.push_back(last);
    for (int i = 0; i < n - 1; ++i)
        cert.provenance.push_back(Word::from_letters(n - 1, {i + 1}));
    cert.provenance.push_back(last_word);
    cert.seed = p.seed;
    cert.qmax = p.qmax;
    cert.epsilon = p.epsilon;
    cert.budgets = bud;

    std::vector<GroupElement> tuple = cert.initial;
    Steerer st{p, tuple, cert.moves};

    // Phase 2: steer entry 1 over (middles, last); it must pair with the
    // last entry into a certified dense two-tuple.
    std::vector<int> helpers1;
    for (int i = 1; i < n; ++i) helpers1.push_back(i);
    st.steer(
        0, helpers1, p.targets[0], half,
        [&](const GroupElement& g) {
            return dense_tuple_certificate({g, last}, p.qmax, thr, bud)
                .all_true();
        },
        bud.steer_candidates, "steer first entry");

    // Phase 3: a two-letter net over the realized outer pair, recorded as
    // the uniform covering object for this deformation.  Its scale is
    // floored at a fraction of the group diameter: below that the center
    // count blows up combinatorially in higher-dimensional products, and
    // the middle entries are placed by exact steering anyway, which
    // searches a superset of the net's words at the same length cap.
    // An arithmetically unlucky pair (near-resonant torus angles) may not
    // cover at the preferred scale within the word-length cap; the net is
    // then recorded at the next coarser rung.
    double eps_net = std::max(1.8 * p.epsilon, 0.45 * spec->diameter());
    std::optional<NetTable> built;
    for (int attempt = 0; !built; ++attempt) {
        Rng rng(p.seed + 0x9e3779b97f4a7c15ULL * attempt);
        try {
            built = build_net(tuple[0], tuple[n - 1], eps_net, 2000, rng, thr,
                              bud);
        } catch (const NetUnreachable&) {
            if (attempt >= 2) throw;
            eps_net *= 1.5;
        }
    }
    NetTable net = std::move(*built);

    // Phase 4: left-multiply each middle entry by an outer-pair word
    // steered onto its residual displacement.
    std::vector<int> outer_map = {0, n - 1};
    std::vector<GroupElement> outer = {tuple[0], tuple[n - 1]};
    const int cap2 = steer_cap(2, bud);
    for (int j = 1; j < n - 1; ++j) {
        GroupElement want = multiply(p.targets[j], inverse(tuple[j]));
        SteerResult hit = steer_to_target(outer, want, cap2, bud);
        if (hit.dist >= p.epsilon)
            throw BudgetExhausted(
                "cover middle entry " + std::to_string(j + 1), hit.dist);
        Move mv = left_multiply_move(j, hit.word.remap(n, outer_map));
        tuple = apply_move(tuple, mv);
        cert.moves.push_back(mv);
    }

    cert.final_tuple = tuple;
    DeformationResult res;
    res.tuple = tuple;
    res.certificate = std::move(cert);
    res.net = std::move(net);
    return res;
}

}  // namespace liedeform
