#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "liedeform/algebra.hpp"
#include "liedeform/config.hpp"
#include "liedeform/group.hpp"
#include "liedeform/net.hpp"
#include "liedeform/words.hpp"

namespace liedeform {

// Product-replacement move on an n-tuple.  All three kinds are invertible
// and preserve the generated subgroup.
struct Move {
    enum class Kind { LeftMultiply, InvertEntry, SwapEntries };
    Kind kind = Kind::LeftMultiply;
    int target = 0;  // entry being replaced (LeftMultiply/InvertEntry/first of swap)
    int other = 0;   // second entry of a swap
    Word multiplier{0};  // word over the tuple; never uses `target`
};

Move left_multiply_move(int target, const Word& multiplier);
Move invert_move(int index);
Move swap_move(int i, int j);

std::vector<GroupElement> apply_move(const std::vector<GroupElement>& tuple,
                                     const Move& m);
// Moves that undo m: one for LeftMultiply/InvertEntry/SwapEntries each.
Move inverse_move(const Move& m);

// Log of a deformation: `initial` is the starting tuple; provenance[i] is
// entry i expressed as a word in the underlying generators (single letters
// except for installed entries); replaying `moves` from `initial` must
// reproduce `final_tuple`.
struct MoveCertificate {
    std::vector<GroupElement> initial;
    std::vector<Word> provenance;
    std::vector<Move> moves;
    std::vector<GroupElement> final_tuple;
    std::uint64_t seed = 0;
    long qmax = 0;
    double epsilon = 0;
    Budgets budgets;
};

// Applies the moves to the initial tuple; throws ReplayMismatch (with the
// first offending entry index) if the result differs from final_tuple by
// more than thr.tau_replay * max(1, move count) in any entry.
std::vector<GroupElement> replay(const MoveCertificate& cert,
                                 const Thresholds& thr = {});

// Each final entry as a reduced word in the initial entries, obtained by
// replaying the moves symbolically.
std::vector<Word> symbolic_words(const MoveCertificate& cert);

struct DeformationProblem {
    const GroupSpec* spec = nullptr;
    std::vector<GroupElement> targets;  // s_1..s_n
    std::vector<GroupElement> gamma;    // generators of the dense subgroup, n-1 entries
    double epsilon = 0;
    long qmax = 200;
    std::uint64_t seed = 0;
    Thresholds thresholds;
    Budgets budgets;
};

struct DeformationResult {
    std::vector<GroupElement> tuple;
    MoveCertificate certificate;
    std::optional<NetTable> net;  // present for the general algorithm
};

// Semisimple-spec deformation: installs an extra generator as a word in the
// given ones, then steers every entry into the epsilon-ball of its target
// by left-multiplying with words in the other entries, certifying density
// and algebra-generation along the way.
DeformationResult deform_to_generate(const DeformationProblem& p);

// General deformation (torus blocks allowed): steers the last entry to a
// point satisfying the density-relevant conditions, steers the first entry
// via a word over the middle generators and the last entry, then covers the
// middle targets by steering two-letter words of the realized outer pair;
// a net over that pair is built and recorded alongside the certificate.
DeformationResult general_deform(const DeformationProblem& p);

}  // namespace liedeform
