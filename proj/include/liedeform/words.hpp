#pragma once

#include <functional>
#include <string>
#include <vector>

#include "liedeform/config.hpp"
#include "liedeform/group.hpp"

namespace liedeform {

// Freely reduced word in the free group F_rank.  Letters are nonzero ints:
// +(i+1) is generator i, -(i+1) its inverse.  Text form writes generator i
// as 'a'+i and its inverse as the capital: "bA" is x2 * x1^{-1}.
class Word {
  public:
    Word() = default;
    explicit Word(int rank) : rank_(rank) {}
    // Reduces the letter sequence.
    static Word from_letters(int rank, const std::vector<int>& letters);
    static Word parse(int rank, const std::string& text);

    int rank() const { return rank_; }
    int size() const { return static_cast<int>(letters_.size()); }
    bool empty() const { return letters_.empty(); }
    const std::vector<int>& letters() const { return letters_; }

    Word inverse() const;
    // Concatenation with free reduction at the seam.
    Word concat(const Word& other) const;
    std::string text() const;

    // Reindexes letters: letter over generator i becomes one over
    // index_map[i].  Used to lift words over a sub-tuple to the full tuple.
    Word remap(int new_rank, const std::vector<int>& index_map) const;

    // Substitutes words for generators (symbolic composition).
    Word substitute(const std::vector<Word>& images) const;

    bool operator==(const Word& o) const = default;

  private:
    int rank_ = 0;
    std::vector<int> letters_;
    friend void append_reduced(Word& w, int letter);
};

// Letter order for shortlex: x1 < x1^{-1} < x2 < x2^{-1} < ...
bool shortlex_less(const Word& a, const Word& b);

GroupElement evaluate(const Word& w, const std::vector<GroupElement>& tuple);

// 1 + sum_{l=1..max_len} 2n * (2n-1)^{l-1}
long count_reduced_words(int rank, int max_len);

// Visits every freely reduced word with min_len <= length <= max_len in
// shortlex order.  Return false from the callback to stop early.
void for_each_word(int rank, int min_len, int max_len,
                   const std::function<bool(const Word&)>& cb);

// Same, with the word's evaluation on `tuple` maintained incrementally
// (one multiplication per visited node).
void for_each_word_value(
    const std::vector<GroupElement>& tuple, int min_len, int max_len,
    const std::function<bool(const Word&, const GroupElement&)>& cb);

struct SteerResult {
    Word word;
    double dist;
};

// The word of length <= max_len minimizing distance(evaluate(w, tuple),
// target); ties (inner products within 1e-12) break by shortlex.  Uses
// exhaustive enumeration while the word count stays under
// budgets.exhaustive_cap and a meet-in-the-middle split beyond; both
// strategies return the same minimizer.
SteerResult steer_to_target(const std::vector<GroupElement>& tuple,
                            const GroupElement& target, int max_len,
                            const Budgets& budgets = {});

// The k best candidates in the same order the top-1 contract uses.
std::vector<SteerResult> steer_candidates(
    const std::vector<GroupElement>& tuple, const GroupElement& target,
    int max_len, int k, const Budgets& budgets = {});

}  // namespace liedeform
