#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "liedeform/algebra.hpp"
#include "liedeform/errors.hpp"
#include "liedeform/group.hpp"
#include "liedeform/json_io.hpp"
#include "liedeform/net.hpp"
#include "liedeform/words.hpp"
#include "oracles.hpp"

using namespace liedeform;

namespace {

std::vector<GroupElement> dense_pair(std::uint64_t seed) {
    auto spec = GroupSpec::parse("so3");
    Rng rng(seed);
    for (;;) {
        GroupElement a = haar_sample(spec, rng), b = haar_sample(spec, rng);
        if (dense_tuple_certificate({a, b}, 200).all_true()) return {a, b};
    }
}

}  // namespace

TEST_CASE("word reduction, parsing, text round trip") {
    Word w = Word::from_letters(2, {1, -1, 2});
    CHECK(w.size() == 1);
    CHECK(w.text() == "b");

    CHECK(Word::from_letters(2, {1, -1}).empty());
    CHECK(Word::parse(2, "aA").empty());
    CHECK(Word::parse(2, "bA").letters() == std::vector<int>{2, -1});
    CHECK(Word::parse(2, "bA").text() == "bA");

    Word nested = Word::from_letters(2, {1, 2, -2, -1, 1, 2});
    CHECK(nested.text() == "ab");

    CHECK_THROWS_AS(Word::parse(2, "c"), InputError);
    CHECK_THROWS_AS(Word::from_letters(2, {3}), InputError);

    Word u = Word::parse(2, "abA");
    CHECK(u.inverse().text() == "aBA");
    CHECK(u.concat(u.inverse()).empty());
    CHECK(Word::parse(2, "ab").concat(Word::parse(2, "Ba")).text() == "aa");

    // remap lifts a rank-2 word onto chosen coordinates of a larger tuple.
    Word lifted = Word::parse(2, "aB").remap(4, {0, 3});
    CHECK(lifted.text() == "aD");

    // substitute composes symbolically.
    Word comp = Word::parse(2, "ab").substitute(
        {Word::parse(3, "ac"), Word::parse(3, "Cb")});
    CHECK(comp.text() == "ab");
}

TEST_CASE("evaluate: identity, order, homomorphism") {
    auto spec = GroupSpec::parse("so3");
    Rng rng(3);
    GroupElement g1 = haar_sample(spec, rng), g2 = haar_sample(spec, rng);
    std::vector<GroupElement> tup = {g1, g2};

    CHECK(distance(evaluate(Word(2), tup), GroupElement::identity(spec)) <
          1e-14);

    // x2 x1 evaluates to g2 g1 (left-to-right product).
    CHECK(distance(evaluate(Word::parse(2, "ba"), tup), multiply(g2, g1)) <
          1e-12);

    for (int trial = 0; trial < 10; ++trial) {
        auto rand_word = [&](int len) {
            std::vector<int> ls;
            for (int i = 0; i < len; ++i) {
                int l = 1 + static_cast<int>(rng.below(2));
                ls.push_back(rng.below(2) ? l : -l);
            }
            return Word::from_letters(2, ls);
        };
        Word a = rand_word(5), b = rand_word(5);
        CHECK(distance(evaluate(a.concat(b), tup),
                       multiply(evaluate(a, tup), evaluate(b, tup))) < 1e-9);
    }

    CHECK_THROWS_AS(evaluate(Word::parse(3, "c"), tup), InputError);
}

TEST_CASE("enumeration: counts, shortlex order, uniqueness") {
    CHECK(count_reduced_words(2, 1) == 5);
    CHECK(count_reduced_words(2, 2) == 17);
    CHECK(count_reduced_words(3, 0) == 1);

    std::vector<Word> seen;
    for_each_word(2, 0, 3, [&](const Word& w) {
        seen.push_back(w);
        return true;
    });
    CHECK(static_cast<long>(seen.size()) == count_reduced_words(2, 3));
    std::set<std::string> texts;
    for (const Word& w : seen) texts.insert(w.text());
    CHECK(texts.size() == seen.size());
    for (size_t i = 1; i < seen.size(); ++i)
        CHECK(shortlex_less(seen[i - 1], seen[i]));

    // Incremental evaluation matches evaluate().
    auto spec = GroupSpec::parse("su2");
    Rng rng(5);
    std::vector<GroupElement> tup = {haar_sample(spec, rng),
                                     haar_sample(spec, rng)};
    for_each_word_value(tup, 0, 5, [&](const Word& w, const GroupElement& v) {
        CHECK(distance(v, evaluate(w, tup)) < 1e-10);
        return true;
    });
}

TEST_CASE("steering: exact hits, monotonicity, strategy equivalence") {
    auto tup = dense_pair(7);
    auto spec = tup[0].spec_ptr();

    SteerResult self = steer_to_target(tup, tup[0], 3);
    CHECK(self.word.text() == "a");
    CHECK(self.dist < 1e-12);

    SteerResult id = steer_to_target(tup, GroupElement::identity(spec), 3);
    CHECK(id.word.empty());
    CHECK(id.dist < 1e-12);

    Rng rng(11);
    GroupElement target = haar_sample(spec, rng);
    double prev = 1e9;
    for (int len : {4, 6, 8, 10}) {
        SteerResult r = steer_to_target(tup, target, len);
        CHECK(r.dist <= prev + 1e-12);
        prev = r.dist;
    }

    // Exhaustive and meet-in-the-middle must return the same minimizer.
    Budgets force_mitm;
    force_mitm.exhaustive_cap = 10;  // far below the word count at length 8
    Budgets force_exhaustive;
    force_exhaustive.exhaustive_cap = 100000000;
    for (int trial = 0; trial < 5; ++trial) {
        GroupElement t = haar_sample(spec, rng);
        SteerResult a = steer_to_target(tup, t, 8, force_mitm);
        SteerResult b = steer_to_target(tup, t, 8, force_exhaustive);
        CHECK(a.word == b.word);
        CHECK(a.dist == doctest::Approx(b.dist).epsilon(1e-12));
    }

    SteerResult deep = steer_to_target(tup, target, 14);
    CHECK(deep.dist < 0.5);

    // Candidate list: sorted, starts with the top-1 result.
    auto cands = steer_candidates(tup, target, 8, 5);
    REQUIRE(cands.size() == 5);
    SteerResult top = steer_to_target(tup, target, 8);
    CHECK(cands[0].word == top.word);
    for (size_t i = 1; i < cands.size(); ++i)
        CHECK(cands[i - 1].dist <= cands[i].dist + 1e-12);
}

TEST_CASE("word evaluation is Lipschitz in the tuple") {
    auto spec = GroupSpec::parse("so3");
    Rng rng(13);
    std::vector<GroupElement> tup = {haar_sample(spec, rng),
                                     haar_sample(spec, rng)};
    const double delta = 0.01;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<GroupElement> moved = {perturb(tup[0], delta, rng),
                                           perturb(tup[1], delta, rng)};
        std::vector<int> ls;
        for (int i = 0; i < 8; ++i) {
            int l = 1 + static_cast<int>(rng.below(2));
            ls.push_back(rng.below(2) ? l : -l);
        }
        Word w = Word::from_letters(2, ls);
        CHECK(distance(evaluate(w, tup), evaluate(w, moved)) <=
              w.size() * delta + 1e-9);
    }
}

TEST_CASE("net: trivial single-word case at huge epsilon") {
    auto tup = dense_pair(17);
    Rng rng(19);
    // 6.0 exceeds twice the SO(3) diameter (2*sqrt(8)), so the identity
    // alone covers at radius eps/2.
    NetTable net = build_net(tup[0], tup[1], 6.0, 1000, rng);
    CHECK(net.words.size() == 1);
    CHECK(net.centers.size() == 1);
    CHECK(net.max_verified_distance <= 3.0);
}

TEST_CASE("net: construction on a dense SO(3) pair") {
    auto tup = dense_pair(23);
    Rng rng(29);
    const double eps = 1.2;
    NetTable net = build_net(tup[0], tup[1], eps, 10000, rng);

    // Centers are the recorded words evaluated at the defining pair.
    REQUIRE(net.words.size() == net.centers.size());
    for (size_t j = 0; j < net.words.size(); ++j) {
        CHECK(net.words[j].rank() == 2);
        CHECK(distance(net.centers[j], evaluate(net.words[j], tup)) < 1e-10);
    }

    // Pairwise separation >= eps/4 (spot check a bounded sample of pairs).
    const size_t k = net.centers.size();
    for (size_t i = 0; i < std::min<size_t>(k, 60); ++i)
        for (size_t j = i + 1; j < std::min<size_t>(k, 60); ++j)
            CHECK(distance(net.centers[i], net.centers[j]) >= eps / 4 - 1e-9);

    // A ball of radius eps/2 = 0.6 covers about 0.4% of SO(3), so a true
    // cover needs a few hundred centers; the greedy selection should not
    // balloon far beyond that.
    CHECK(k >= 100);
    CHECK(k <= 800);

    // Fresh-sample coverage.  The builder certifies radius eps/2 only up
    // to its sampling confidence (residual holes of tiny measure survive),
    // so the nominal radius gets a fraction bound and a modest slack
    // radius gets the exact one: a hole at depth 0.3 has Haar measure
    // around 5e-4 and would not survive the settling phase.
    Rng probe(31);
    CHECK(coverage_fraction(net, tup[0], tup[1], eps / 2, 3000, probe) >=
          0.999);
    Rng probe2(32);
    CHECK(coverage_fraction(net, tup[0], tup[1], 0.75 * eps, 3000, probe2) ==
          doctest::Approx(1.0));
    CHECK(net.max_verified_distance <= eps / 2);

    // Stability: perturbing the defining pair within the margin keeps an
    // eps-net (the margin is exactly the word-length Lipschitz allowance).
    double margin = net_margin(net);
    CHECK(margin > 0);
    Rng prng(37);
    for (int trial = 0; trial < 3; ++trial) {
        GroupElement x1 = perturb(tup[0], margin, prng);
        GroupElement x2 = perturb(tup[1], margin, prng);
        Rng vr(41 + trial);
        CHECK(coverage_fraction(net, x1, x2, eps, 2000, vr) ==
              doctest::Approx(1.0));
    }
}

TEST_CASE("net: margin formula and reproducibility") {
    auto tup = dense_pair(43);

    Rng r1(47), r2(47);
    NetTable n1 = build_net(tup[0], tup[1], 1.6, 2000, r1);
    NetTable n2 = build_net(tup[0], tup[1], 1.6, 2000, r2);
    CHECK(dump_canonical(net_to_json(n1)) == dump_canonical(net_to_json(n2)));

    // Margin: min(eps/2, (eps/2)/max_len).
    NetTable fake = n1;
    fake.epsilon = 1.0;
    fake.max_word_len = 10;
    CHECK(net_margin(fake) == doctest::Approx(0.05));
    fake.max_word_len = 1;
    CHECK(net_margin(fake) == doctest::Approx(0.5));

    // Serialization round trip.
    NetTable back = net_from_json(net_to_json(n1));
    CHECK(back.words.size() == n1.words.size());
    CHECK(back.epsilon == n1.epsilon);
    CHECK(back.seed == n1.seed);
    for (size_t j = 0; j < back.centers.size(); ++j)
        CHECK(distance(back.centers[j], n1.centers[j]) < 1e-12);

    // nearest_center is consistent with a linear scan.
    Rng rng(53);
    GroupElement t = haar_sample(tup[0].spec_ptr(), rng);
    auto [idx, dist] = nearest_center(n1, t);
    double best = 1e9;
    int best_idx = -1;
    for (size_t j = 0; j < n1.centers.size(); ++j) {
        double d = distance(n1.centers[j], t);
        if (d < best) {
            best = d;
            best_idx = static_cast<int>(j);
        }
    }
    CHECK(idx == best_idx);
    CHECK(dist == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("net: unreachable scale raises the structured error") {
    // A pair generating a small finite subgroup cannot cover at any fine
    // scale, so the length cap must fire.
    auto spec = GroupSpec::parse("so3");
    GroupElement a = oracles::so3_element(spec, oracles::rz_mat(M_PI / 2));
    GroupElement b = oracles::so3_element(spec, oracles::rz_mat(M_PI / 4));
    Rng rng(59);
    Budgets tight;
    tight.net_len_cap = 6;
    CHECK_THROWS_AS(build_net(a, b, 0.3, 500, rng, Thresholds{}, tight),
                    NetUnreachable);
}
