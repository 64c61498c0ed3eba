#pragma once

#include <cstdint>
#include <vector>

#include "liedeform/config.hpp"
#include "liedeform/group.hpp"
#include "liedeform/rng.hpp"
#include "liedeform/words.hpp"

namespace liedeform {

// Finite family of two-letter words whose values at the defining pair cover
// the group at radius epsilon/2 while staying pairwise epsilon/4 separated.
struct NetTable {
    double epsilon = 0;
    std::vector<Word> words;            // rank-2 words
    std::vector<GroupElement> centers;  // evaluations at the defining pair
    GroupElement pair_first;
    GroupElement pair_second;
    std::uint64_t seed = 0;         // seed of the recorded verification batch
    int confidence_samples = 0;     // size of that batch
    int max_word_len = 0;
    double max_verified_distance = 0;  // worst sample-to-net distance seen
};

// Greedy construction: enumerate two-letter words by increasing length,
// admit a value as a center when it is epsilon/4 separated from the chosen
// centers and covers a not-yet-covered probe point; finish when a fresh
// Haar batch of confidence_samples points all lie within epsilon/2 of the
// net.  Throws NetUnreachable when the length cap is hit first.
NetTable build_net(const GroupElement& g1, const GroupElement& g2,
                   double epsilon, int confidence_samples, Rng& rng,
                   const Thresholds& thr = {}, const Budgets& budgets = {});

// Perturbation radius for the defining pair under which the net degrades
// from an epsilon/2-net to at most an epsilon-net: min(eps/2, (eps/2)/L)
// with L the longest word length.
double net_margin(const NetTable& net);

// Index of the center nearest to the target, and that distance.
std::pair<int, double> nearest_center(const NetTable& net,
                                      const GroupElement& target);

// Fraction of `samples` fresh Haar points within `radius` of the net when
// the words are re-evaluated at the given pair (coverage re-verification).
double coverage_fraction(const NetTable& net, const GroupElement& x1,
                         const GroupElement& x2, double radius, int samples,
                         Rng& rng);

}  // namespace liedeform
