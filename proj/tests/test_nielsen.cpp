#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "liedeform/algebra.hpp"
#include "liedeform/errors.hpp"
#include "liedeform/group.hpp"
#include "liedeform/json_io.hpp"
#include "liedeform/nielsen.hpp"
#include "liedeform/words.hpp"
#include "oracles.hpp"

using namespace liedeform;

namespace {

std::vector<GroupElement> haar_tuple(const char* spec_text, int n,
                                     std::uint64_t seed) {
    auto spec = GroupSpec::parse(spec_text);
    Rng rng(seed);
    std::vector<GroupElement> out;
    for (int i = 0; i < n; ++i) out.push_back(haar_sample(spec, rng));
    return out;
}

std::vector<GroupElement> dense_tuple(const char* spec_text, int n,
                                      std::uint64_t seed) {
    auto spec = GroupSpec::parse(spec_text);
    Rng rng(seed);
    for (;;) {
        std::vector<GroupElement> g;
        for (int i = 0; i < n; ++i) g.push_back(haar_sample(spec, rng));
        if (dense_tuple_certificate(g, 200).all_true()) return g;
    }
}

double tuple_gap(const std::vector<GroupElement>& a,
                 const std::vector<GroupElement>& b) {
    double worst = 0;
    for (size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, distance(a[i], b[i]));
    return worst;
}

}  // namespace

TEST_CASE("moves: the three kinds act as recorded") {
    auto t = haar_tuple("so3", 3, 101);

    auto lm = apply_move(t, left_multiply_move(0, Word::parse(3, "b")));
    CHECK(distance(lm[0], multiply(t[1], t[0])) < 1e-12);
    CHECK(distance(lm[1], t[1]) == 0);
    CHECK(distance(lm[2], t[2]) == 0);

    auto lw = apply_move(t, left_multiply_move(2, Word::parse(3, "aB")));
    CHECK(distance(lw[2], multiply(multiply(t[0], inverse(t[1])), t[2])) <
          1e-12);

    CHECK(tuple_gap(apply_move(t, left_multiply_move(1, Word(3))), t) == 0);

    auto iv = apply_move(t, invert_move(1));
    CHECK(distance(iv[1], inverse(t[1])) < 1e-12);
    CHECK(distance(iv[0], t[0]) == 0);

    auto sw = apply_move(t, swap_move(0, 2));
    CHECK(distance(sw[0], t[2]) == 0);
    CHECK(distance(sw[2], t[0]) == 0);
    CHECK(distance(sw[1], t[1]) == 0);

    // A multiplier may use every entry except the one it replaces.
    CHECK_THROWS_AS(apply_move(t, left_multiply_move(0, Word::parse(3, "ba"))),
                    InputError);
    CHECK_THROWS_AS(apply_move(t, left_multiply_move(1, Word::parse(2, "a"))),
                    InputError);
    CHECK_THROWS_AS(apply_move(t, swap_move(1, 1)), InputError);
    CHECK_THROWS_AS(apply_move(t, invert_move(3)), InputError);
}

TEST_CASE("moves: every kind inverts cleanly") {
    auto t = haar_tuple("so3", 3, 103);
    std::vector<Move> moves = {left_multiply_move(0, Word::parse(3, "bCb")),
                               invert_move(2), swap_move(0, 1)};
    for (const Move& m : moves) {
        auto once = apply_move(t, m);
        auto back = apply_move(once, inverse_move(m));
        CHECK(tuple_gap(back, t) < 1e-10);
    }
}

TEST_CASE("replay: empty move list, success, and corruption") {
    auto t = haar_tuple("so3", 3, 107);

    MoveCertificate cert;
    cert.initial = t;
    cert.final_tuple = t;
    CHECK(tuple_gap(replay(cert), t) == 0);

    cert.moves = {left_multiply_move(0, Word::parse(3, "b")), swap_move(1, 2),
                  invert_move(2)};
    auto cur = t;
    for (const Move& m : cert.moves) cur = apply_move(cur, m);
    cert.final_tuple = cur;
    CHECK(tuple_gap(replay(cert), cur) == 0);

    // Perturbing one recorded entry beyond the replay tolerance names it.
    MoveCertificate bad = cert;
    Rng prng(109);
    bad.final_tuple[1] = perturb(bad.final_tuple[1], 1e-3, prng);
    try {
        replay(bad);
        CHECK(false);
    } catch (const ReplayMismatch& e) {
        CHECK(e.entry_index == 1);
        CHECK(e.residual > 1e-5);
    }

    MoveCertificate wrong = cert;
    wrong.final_tuple.pop_back();
    CHECK_THROWS_AS(replay(wrong), InputError);
}

TEST_CASE("symbolic replay expresses entries over the initial tuple") {
    auto t = haar_tuple("so3", 3, 113);
    MoveCertificate cert;
    cert.initial = t;
    cert.moves = {left_multiply_move(0, Word::parse(3, "b")), swap_move(1, 2),
                  invert_move(2)};
    auto cur = t;
    for (const Move& m : cert.moves) cur = apply_move(cur, m);
    cert.final_tuple = cur;

    std::vector<Word> words = symbolic_words(cert);
    REQUIRE(words.size() == 3);
    CHECK(words[0].text() == "ba");
    CHECK(words[1].text() == "c");
    CHECK(words[2].text() == "B");
    for (int i = 0; i < 3; ++i)
        CHECK(distance(evaluate(words[i], t), cur[i]) < 1e-10);
}

TEST_CASE("deform problems validate their inputs") {
    auto spec = GroupSpec::parse("so3");
    auto g = dense_tuple("so3", 2, 127);

    DeformationProblem p;
    p.spec = spec.get();
    p.gamma = g;
    p.targets = haar_tuple("so3", 3, 131);
    p.epsilon = 0.25;

    DeformationProblem two = p;
    two.targets.pop_back();
    two.gamma.pop_back();
    CHECK_THROWS_AS(deform_to_generate(two), InputError);

    DeformationProblem flat = p;
    flat.epsilon = 0;
    CHECK_THROWS_AS(deform_to_generate(flat), InputError);

    DeformationProblem shallow = p;
    shallow.qmax = 1;
    CHECK_THROWS_AS(deform_to_generate(shallow), InputError);

    DeformationProblem lopsided = p;
    lopsided.gamma.push_back(g[0]);
    CHECK_THROWS_AS(deform_to_generate(lopsided), InputError);

    // Torus factors are outside the semisimple algorithm's contract.
    auto tspec = GroupSpec::parse("so3xtorus1");
    DeformationProblem toral;
    toral.spec = tspec.get();
    toral.gamma = haar_tuple("so3xtorus1", 2, 137);
    toral.targets = haar_tuple("so3xtorus1", 3, 139);
    toral.epsilon = 0.25;
    CHECK_THROWS_AS(deform_to_generate(toral), InputError);
}

TEST_CASE("deform_to_generate: rejects generators that are not dense") {
    auto spec = GroupSpec::parse("so3");
    const double pi = 3.14159265358979323846;
    GroupElement r5(spec, {Eigen::MatrixXd(oracles::rz_mat(2 * pi / 5))});
    GroupElement r7(spec, {Eigen::MatrixXd(oracles::rz_mat(2 * pi / 7))});

    DeformationProblem p;
    p.spec = spec.get();
    p.gamma = {r5, r7};
    p.targets = haar_tuple("so3", 3, 149);
    p.epsilon = 0.25;
    p.seed = 151;
    CHECK_THROWS_AS(deform_to_generate(p), CertificationFailed);
}

TEST_CASE("deform_to_generate: lands every entry, replays, and is "
          "deterministic") {
    auto spec = GroupSpec::parse("so3");
    DeformationProblem p;
    p.spec = spec.get();
    p.gamma = dense_tuple("so3", 2, 157);
    p.targets = haar_tuple("so3", 3, 163);
    p.epsilon = 0.25;
    p.seed = 167;

    DeformationResult r = deform_to_generate(p);
    REQUIRE(r.tuple.size() == 3);
    for (int i = 0; i < 3; ++i)
        CHECK(distance(r.tuple[i], p.targets[i]) < p.epsilon);
    CHECK(!r.net.has_value());

    const MoveCertificate& cert = r.certificate;
    REQUIRE(cert.initial.size() == 3);
    CHECK(distance(cert.initial[0], p.gamma[0]) == 0);
    CHECK(distance(cert.initial[1], p.gamma[1]) == 0);

    // The installed third entry is a recorded word over the two generators.
    REQUIRE(cert.provenance.size() == 3);
    CHECK(cert.provenance[2].rank() == 2);
    CHECK(!cert.provenance[2].empty());
    CHECK(distance(evaluate(cert.provenance[2], p.gamma), cert.initial[2]) <
          1e-10);

    auto replayed = replay(cert);
    CHECK(tuple_gap(replayed, r.tuple) < 1e-7);

    std::vector<Word> sym = symbolic_words(cert);
    double sym_tol = 1e-8 * std::max<size_t>(1, cert.moves.size());
    for (int i = 0; i < 3; ++i)
        CHECK(distance(evaluate(sym[i], cert.initial), r.tuple[i]) < sym_tol);

    // No move may touch the entry it multiplies.
    for (const Move& m : cert.moves)
        if (m.kind == Move::Kind::LeftMultiply)
            for (int l : m.multiplier.letters())
                CHECK(std::abs(l) - 1 != m.target);

    DeformationResult again = deform_to_generate(p);
    CHECK(dump_canonical(move_certificate_to_json(r.certificate)) ==
          dump_canonical(move_certificate_to_json(again.certificate)));
}

TEST_CASE("deform_to_generate: no moves are recorded when the targets are "
          "already met") {
    auto spec = GroupSpec::parse("so3");
    DeformationProblem p;
    p.spec = spec.get();
    p.gamma = dense_tuple("so3", 2, 157);
    p.targets = haar_tuple("so3", 3, 163);
    p.epsilon = 0.25;
    p.seed = 167;
    DeformationResult first = deform_to_generate(p);

    DeformationProblem settled = p;
    settled.targets = first.certificate.initial;
    DeformationResult r = deform_to_generate(settled);
    CHECK(r.certificate.moves.empty());
    CHECK(tuple_gap(r.tuple, settled.targets) < 1e-12);
}

TEST_CASE("general_deform: semisimple spec satisfies the same contract") {
    auto spec = GroupSpec::parse("so3");
    DeformationProblem p;
    p.spec = spec.get();
    p.gamma = dense_tuple("so3", 2, 191);
    p.targets = haar_tuple("so3", 3, 193);
    p.epsilon = 0.3;
    p.seed = 197;

    DeformationResult r = general_deform(p);
    REQUIRE(r.tuple.size() == 3);
    for (int i = 0; i < 3; ++i)
        CHECK(distance(r.tuple[i], p.targets[i]) < p.epsilon);
    CHECK(r.net.has_value());
    CHECK(!r.net->words.empty());
    CHECK(tuple_gap(replay(r.certificate), r.tuple) < 1e-7);
}

TEST_CASE("general_deform: torus-bearing spec end to end") {
    auto spec = GroupSpec::parse("so3xtorus1");
    DeformationProblem p;
    p.spec = spec.get();
    p.gamma = dense_tuple("so3xtorus1", 3, 199);
    p.targets = haar_tuple("so3xtorus1", 4, 211);
    p.epsilon = 0.4;
    p.seed = 223;

    DeformationResult r = general_deform(p);
    REQUIRE(r.tuple.size() == 4);
    for (int i = 0; i < 4; ++i)
        CHECK(distance(r.tuple[i], p.targets[i]) < p.epsilon);

    REQUIRE(r.net.has_value());
    CHECK(r.net->words.size() >= 1);
    CHECK(r.net->epsilon > 0);

    const MoveCertificate& cert = r.certificate;
    REQUIRE(cert.initial.size() == 4);
    for (int i = 0; i < 3; ++i)
        CHECK(distance(cert.initial[i], p.gamma[i]) == 0);
    CHECK(tuple_gap(replay(cert), r.tuple) < 1e-7);

    std::vector<Word> sym = symbolic_words(cert);
    double sym_tol = 1e-8 * std::max<size_t>(1, cert.moves.size());
    for (int i = 0; i < 4; ++i)
        CHECK(distance(evaluate(sym[i], cert.initial), r.tuple[i]) < sym_tol);
}
