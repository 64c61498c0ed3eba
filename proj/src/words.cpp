#include "liedeform/words.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "liedeform/errors.hpp"

namespace liedeform {

namespace {

// Letter <-> order code; codes sort x1 < x1^{-1} < x2 < x2^{-1} < ...
inline int code_of(int letter) {
    return letter > 0 ? 2 * (letter - 1) : 2 * (-letter - 1) + 1;
}
inline int letter_of(int code) {
    return code % 2 == 0 ? code / 2 + 1 : -(code / 2 + 1);
}

}  // namespace

void append_reduced(Word& w, int letter) {
    if (!w.letters_.empty() && w.letters_.back() == -letter)
        w.letters_.pop_back();
    else
        w.letters_.push_back(letter);
}

Word Word::from_letters(int rank, const std::vector<int>& letters) {
    Word w(rank);
    for (int l : letters) {
        if (l == 0 || std::abs(l) > rank)
            throw InputError("word letter out of range");
        append_reduced(w, l);
    }
    return w;
}

Word Word::parse(int rank, const std::string& text) {
    std::vector<int> letters;
    for (char ch : text) {
        if (ch >= 'a' && ch < 'a' + rank)
            letters.push_back(ch - 'a' + 1);
        else if (ch >= 'A' && ch < 'A' + rank)
            letters.push_back(-(ch - 'A' + 1));
        else
            throw InputError(std::string("bad word character '") + ch + "'");
    }
    return from_letters(rank, letters);
}

std::string Word::text() const {
    std::string out;
    for (int l : letters_)
        out += static_cast<char>(l > 0 ? 'a' + l - 1 : 'A' - l - 1);
    return out;
}

Word Word::inverse() const {
    Word w(rank_);
    for (auto it = letters_.rbegin(); it != letters_.rend(); ++it)
        w.letters_.push_back(-*it);
    return w;
}

Word Word::concat(const Word& other) const {
    Word w = *this;
    for (int l : other.letters_) append_reduced(w, l);
    return w;
}

Word Word::remap(int new_rank, const std::vector<int>& index_map) const {
    Word w(new_rank);
    for (int l : letters_) {
        int i = std::abs(l) - 1;
        if (i >= static_cast<int>(index_map.size()) ||
            index_map[i] >= new_rank)
            throw InputError("word remap: index map out of range");
        w.letters_.push_back(l > 0 ? index_map[i] + 1 : -(index_map[i] + 1));
    }
    return w;
}

Word Word::substitute(const std::vector<Word>& images) const {
    if (static_cast<int>(images.size()) < rank_)
        throw InputError("word substitute: not enough images");
    Word out(images.empty() ? 0 : images[0].rank());
    for (int l : letters_) {
        const Word& im = images[std::abs(l) - 1];
        if (l > 0)
            out = out.concat(im);
        else
            out = out.concat(im.inverse());
    }
    return out;
}

bool shortlex_less(const Word& a, const Word& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    for (int i = 0; i < a.size(); ++i) {
        int ca = code_of(a.letters()[i]), cb = code_of(b.letters()[i]);
        if (ca != cb) return ca < cb;
    }
    return false;
}

GroupElement evaluate(const Word& w, const std::vector<GroupElement>& tuple) {
    if (tuple.empty()) throw InputError("evaluate: empty tuple");
    GroupElement acc = GroupElement::identity(tuple[0].spec_ptr());
    for (int l : w.letters()) {
        int i = std::abs(l) - 1;
        if (i >= static_cast<int>(tuple.size()))
            throw InputError("evaluate: word uses index beyond tuple");
        acc = l > 0 ? multiply(acc, tuple[i])
                    : multiply(acc, inverse(tuple[i]));
    }
    return acc;
}

long count_reduced_words(int rank, int max_len) {
    double total = 1;
    double level = 2.0 * rank;
    for (int l = 1; l <= max_len; ++l) {
        total += level;
        level *= 2.0 * rank - 1.0;
        if (total > 4e18) return std::numeric_limits<long>::max();
    }
    return static_cast<long>(total);
}

namespace {

// Depth-first enumeration of reduced words of one exact length, letters in
// code order, with an optional incrementally maintained product stack.
struct RawEnum {
    int rank;
    const std::vector<GroupElement>* letter_vals = nullptr;  // 2*rank entries
    std::vector<int> letters;
    std::vector<GroupElement> prod_stack;  // prod_stack[d] = value of prefix d

    bool visit_exact(int len,
                     const std::function<bool(const std::vector<int>&,
                                              const GroupElement*)>& cb) {
        if (static_cast<int>(letters.size()) == len) {
            const GroupElement* v =
                letter_vals ? &prod_stack[letters.size()] : nullptr;
            return cb(letters, v);
        }
        for (int code = 0; code < 2 * rank; ++code) {
            int l = letter_of(code);
            if (!letters.empty() && letters.back() == -l) continue;
            letters.push_back(l);
            if (letter_vals)
                prod_stack[letters.size()] = multiply(
                    prod_stack[letters.size() - 1], (*letter_vals)[code]);
            bool go = visit_exact(len, cb);
            letters.pop_back();
            if (!go) return false;
        }
        return true;
    }
};

std::vector<GroupElement> letter_values(
    const std::vector<GroupElement>& tuple) {
    std::vector<GroupElement> vals;
    for (const GroupElement& g : tuple) {
        vals.push_back(g);
        vals.push_back(inverse(g));
    }
    return vals;
}

void raw_for_each(int rank, const std::vector<GroupElement>* tuple,
                  int min_len, int max_len,
                  const std::function<bool(const std::vector<int>&,
                                           const GroupElement*)>& cb) {
    if (rank < 1) throw InputError("word enumeration: rank must be >= 1");
    RawEnum e;
    e.rank = rank;
    std::vector<GroupElement> vals;
    if (tuple) {
        vals = letter_values(*tuple);
        e.letter_vals = &vals;
        e.prod_stack.assign(max_len + 1,
                            GroupElement::identity((*tuple)[0].spec_ptr()));
    }
    for (int len = std::max(0, min_len); len <= max_len; ++len)
        if (!e.visit_exact(len, cb)) return;
}

double re_trace(const GroupElement& g) {
    double s = 0;
    for (int b = 0; b < g.spec().num_blocks(); ++b) {
        if (std::holds_alternative<Eigen::MatrixXd>(g.block(b)))
            s += g.real_block(b).trace();
        else
            s += g.su2_block(b).trace().real();
    }
    return s;
}

constexpr double kTieEps = 1e-12;

struct Cand {
    double ip;
    Word word;
};

// Keeps the k best candidates sorted by (ip desc, shortlex asc).  The
// builder is only invoked when the candidate actually qualifies.
void offer(std::vector<Cand>& top, int k, double ip,
           const std::function<Word()>& build) {
    if (static_cast<int>(top.size()) == k && ip <= top.back().ip + kTieEps &&
        !(std::abs(ip - top.back().ip) <= kTieEps))
        return;
    Word w = build();
    for (const Cand& c : top)
        if (c.word == w) return;
    size_t pos = top.size();
    for (size_t i = 0; i < top.size(); ++i) {
        bool better = ip > top[i].ip + kTieEps ||
                      (std::abs(ip - top[i].ip) <= kTieEps &&
                       shortlex_less(w, top[i].word));
        if (better) {
            pos = i;
            break;
        }
    }
    if (pos == top.size() && static_cast<int>(top.size()) >= k) return;
    top.insert(top.begin() + pos, Cand{ip, std::move(w)});
    if (static_cast<int>(top.size()) > k) top.pop_back();
}

std::vector<SteerResult> finish(const std::vector<Cand>& top, double d2_base,
                                const std::vector<GroupElement>& tuple,
                                const GroupElement& target) {
    std::vector<SteerResult> out;
    for (const Cand& c : top) {
        // Recompute the distance from the actual evaluation so the reported
        // figure is exact for the returned word.
        double d = distance(evaluate(c.word, tuple), target);
        (void)d2_base;
        out.push_back({c.word, d});
    }
    return out;
}

std::vector<SteerResult> steer_exhaustive(
    const std::vector<GroupElement>& tuple, const GroupElement& target,
    int max_len, int k) {
    std::vector<Cand> top;
    const int rank = static_cast<int>(tuple.size());
    raw_for_each(rank, &tuple, 0, max_len,
                 [&](const std::vector<int>& letters, const GroupElement* v) {
                     double ip = inner(*v, target);
                     offer(top, k, ip, [&] {
                         return Word::from_letters(rank, letters);
                     });
                     return true;
                 });
    return finish(top, 0, tuple, target);
}

struct HalfTable {
    // One matrix of flattened values per leading letter code; row i of
    // bucket c is the i-th enumerated word starting with code c.
    std::vector<Eigen::MatrixXd> flats;
    std::vector<std::vector<std::vector<int>>> words;
};

HalfTable build_right_table(const std::vector<GroupElement>& tuple,
                            int max_len) {
    const int rank = static_cast<int>(tuple.size());
    HalfTable t;
    std::vector<std::vector<Eigen::VectorXd>> rows(2 * rank);
    t.words.assign(2 * rank, {});
    raw_for_each(rank, &tuple, 1, max_len,
                 [&](const std::vector<int>& letters, const GroupElement* v) {
                     int c = code_of(letters[0]);
                     rows[c].push_back(flatten(*v));
                     t.words[c].push_back(letters);
                     return true;
                 });
    for (int c = 0; c < 2 * rank; ++c) {
        Eigen::MatrixXd m(rows[c].size(),
                          rows[c].empty() ? 0 : rows[c][0].size());
        for (size_t i = 0; i < rows[c].size(); ++i)
            m.row(i) = rows[c][i].transpose();
        t.flats.push_back(std::move(m));
    }
    return t;
}

std::vector<SteerResult> steer_mitm(const std::vector<GroupElement>& tuple,
                                    const GroupElement& target, int max_len,
                                    int k) {
    const int rank = static_cast<int>(tuple.size());
    const int left_len = (max_len + 1) / 2;
    const int right_len = max_len / 2;
    {
        double lefts = static_cast<double>(count_reduced_words(rank, left_len));
        double rights =
            static_cast<double>(count_reduced_words(rank, right_len));
        if (lefts * rights > 2e10)
            throw InputError("steer budget too large for the split search");
    }
    HalfTable rights = build_right_table(tuple, right_len);
    std::vector<Cand> top;

    raw_for_each(
        rank, &tuple, 0, left_len,
        [&](const std::vector<int>& uletters, const GroupElement* uval) {
            GroupElement m = multiply(inverse(*uval), target);
            // The empty right half: the candidate is the left word itself.
            offer(top, k, re_trace(m),
                  [&] { return Word::from_letters(rank, uletters); });
            Eigen::VectorXd mf = flatten(m);
            int skip = uletters.empty() ? -1 : code_of(uletters.back()) ^ 1;
            double floor_ip = static_cast<int>(top.size()) == k
                                  ? top.back().ip - kTieEps
                                  : -std::numeric_limits<double>::infinity();
            for (int c = 0; c < 2 * rank; ++c) {
                if (c == skip || rights.flats[c].rows() == 0) continue;
                Eigen::VectorXd ips = rights.flats[c] * mf;
                for (int i = 0; i < ips.size(); ++i) {
                    if (ips[i] < floor_ip) continue;
                    offer(top, k, ips[i], [&] {
                        std::vector<int> letters = uletters;
                        letters.insert(letters.end(),
                                       rights.words[c][i].begin(),
                                       rights.words[c][i].end());
                        return Word::from_letters(rank, letters);
                    });
                    floor_ip = static_cast<int>(top.size()) == k
                                   ? top.back().ip - kTieEps
                                   : -std::numeric_limits<double>::infinity();
                }
            }
            return true;
        });
    return finish(top, 0, tuple, target);
}

}  // namespace

void for_each_word(int rank, int min_len, int max_len,
                   const std::function<bool(const Word&)>& cb) {
    raw_for_each(rank, nullptr, min_len, max_len,
                 [&](const std::vector<int>& letters, const GroupElement*) {
                     return cb(Word::from_letters(rank, letters));
                 });
}

void for_each_word_value(
    const std::vector<GroupElement>& tuple, int min_len, int max_len,
    const std::function<bool(const Word&, const GroupElement&)>& cb) {
    const int rank = static_cast<int>(tuple.size());
    raw_for_each(rank, &tuple, min_len, max_len,
                 [&](const std::vector<int>& letters, const GroupElement* v) {
                     return cb(Word::from_letters(rank, letters), *v);
                 });
}

std::vector<SteerResult> steer_candidates(
    const std::vector<GroupElement>& tuple, const GroupElement& target,
    int max_len, int k, const Budgets& budgets) {
    if (tuple.empty()) throw InputError("steer: empty tuple");
    require_same_spec(tuple[0].spec(), target.spec(), "steer");
    const int rank = static_cast<int>(tuple.size());
    if (count_reduced_words(rank, max_len) <= budgets.exhaustive_cap)
        return steer_exhaustive(tuple, target, max_len, k);
    return steer_mitm(tuple, target, max_len, k);
}

SteerResult steer_to_target(const std::vector<GroupElement>& tuple,
                            const GroupElement& target, int max_len,
                            const Budgets& budgets) {
    auto c = steer_candidates(tuple, target, max_len, 1, budgets);
    return c[0];
}

}  // namespace liedeform
