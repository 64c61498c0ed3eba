#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "liedeform/errors.hpp"
#include "liedeform/group.hpp"
#include "liedeform/json_io.hpp"
#include "liedeform/rng.hpp"
#include "liedeform/walk.hpp"
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

GroupElement so3_rz(double t) {
    auto spec = GroupSpec::parse("so3");
    return GroupElement(spec, {Eigen::MatrixXd(oracles::rz_mat(t))});
}

double block_trace(const GroupElement& g) { return g.real_block(0).trace(); }

int comma_fields(const std::string& row) {
    int n = 1;
    for (char c : row)
        if (c == ',') ++n;
    return n;
}

}  // namespace

TEST_CASE("y_membership: torsion entries and degenerate subtuples fail") {
    auto t = haar_tuple("so3", 3, 401);
    CHECK(y_membership(t, 200));

    auto with_id = t;
    with_id[1] = GroupElement::identity(GroupSpec::parse("so3"));
    CHECK(!y_membership(with_id, 200));

    // Duplicated entry: dropping the third leaves a rank-deficient pair.
    std::vector<GroupElement> dup = {t[0], t[0], t[1]};
    CHECK(!y_membership(dup, 200));

    auto prod = haar_tuple("so3xso3", 3, 409);
    CHECK(y_membership(prod, 200));

    // Identity in one simple factor is torsion there even if the other
    // factor is generic.
    auto spec2 = GroupSpec::parse("so3xso3");
    auto mixed = prod;
    mixed[2] = GroupElement(
        spec2, {Eigen::MatrixXd(prod[2].real_block(0)),
                Eigen::MatrixXd(Eigen::Matrix3d::Identity())});
    CHECK(!y_membership(mixed, 200));

    CHECK_THROWS_AS(y_membership({t[0], t[1]}, 200), InputError);
    CHECK_THROWS_AS(y_membership(haar_tuple("so3xtorus1", 3, 419), 200),
                    InputError);
}

TEST_CASE("run_walk: input validation") {
    auto spec = GroupSpec::parse("so3");
    auto start = haar_tuple("so3", 3, 421);

    WalkConfig cfg;
    cfg.n = 3;
    cfg.steps = 10;
    CHECK_THROWS_AS(run_walk(cfg, start), InputError);  // missing spec

    cfg.spec = spec.get();
    cfg.n = 4;
    CHECK_THROWS_AS(run_walk(cfg, start), InputError);  // size mismatch

    cfg.n = 1;
    CHECK_THROWS_AS(run_walk(cfg, {start[0]}), InputError);

    cfg.n = 3;
    cfg.thinning = 0;
    CHECK_THROWS_AS(run_walk(cfg, start), InputError);

    cfg.thinning = 10;
    cfg.burn_in = 10;
    CHECK_THROWS_AS(run_walk(cfg, start), InputError);  // burn_in >= steps

    cfg.burn_in = 0;
    cfg.steps = -1;
    CHECK_THROWS_AS(run_walk(cfg, start), InputError);

    // The restricted move set needs a third entry to draw multipliers from.
    WalkConfig r;
    r.spec = spec.get();
    r.n = 2;
    r.steps = 10;
    r.burn_in = 1;
    r.move_set = MoveSet::RestrictedL21L31;
    CHECK_THROWS_AS(run_walk(r, haar_tuple("so3", 2, 431)), InputError);
}

TEST_CASE("run_walk: zero retained samples leaves well-formed stats") {
    auto spec = GroupSpec::parse("so3");
    auto start = haar_tuple("so3", 3, 433);

    WalkConfig cfg;
    cfg.spec = spec.get();
    cfg.n = 3;
    cfg.steps = 0;
    cfg.seed = 7;
    WalkStats st = run_walk(cfg, start);
    CHECK(st.samples == 0);
    CHECK(st.steps == 0);
    CHECK(st.seed == 7);
    REQUIRE(st.mean_trace.size() == 3);
    REQUIRE(st.mean_trace_sq.size() == 3);
    REQUIRE(st.mean_pair.size() == 3);
    for (double x : st.mean_trace) CHECK(x == 0.0);
    for (double x : st.mean_pair) CHECK(x == 0.0);
    REQUIRE(st.final_tuple.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(distance(st.final_tuple[i], start[i]) == 0.0);
    CHECK(st.start_in_y == st.final_in_y);

    // Thinning longer than the post-burn-in window: moves happen but no
    // sample is ever retained.
    cfg.steps = 50;
    cfg.burn_in = 49;
    cfg.thinning = 100;
    std::vector<std::string> rows;
    WalkStats none = run_walk(cfg, start, &rows);
    CHECK(none.samples == 0);
    CHECK(rows.empty());
    for (double x : none.mean_trace_sq) CHECK(x == 0.0);

    // Torus factors put the tuple outside the membership test's domain.
    auto tspec = GroupSpec::parse("so3xtorus1");
    WalkConfig tc;
    tc.spec = tspec.get();
    tc.n = 3;
    tc.steps = 100;
    tc.burn_in = 10;
    tc.seed = 11;
    WalkStats ts = run_walk(tc, haar_tuple("so3xtorus1", 3, 439));
    CHECK(!ts.start_in_y);
    CHECK(!ts.final_in_y);
    CHECK(ts.samples == (100 - 10) / 10);
}

TEST_CASE("run_walk: deterministic in the seed, sample counts, csv shape") {
    auto spec = GroupSpec::parse("so3");
    auto start = haar_tuple("so3", 3, 443);

    WalkConfig cfg;
    cfg.spec = spec.get();
    cfg.n = 3;
    cfg.steps = 2000;
    cfg.burn_in = 100;
    cfg.thinning = 7;
    cfg.seed = 4242;

    std::vector<std::string> rows_a, rows_b;
    WalkStats a = run_walk(cfg, start, &rows_a);
    WalkStats b = run_walk(cfg, start, &rows_b);

    CHECK(dump_canonical(walk_stats_to_json(a)) ==
          dump_canonical(walk_stats_to_json(b)));
    CHECK(rows_a == rows_b);

    CHECK(a.samples == (2000 - 100) / 7);
    CHECK(rows_a.size() == static_cast<size_t>(a.samples));
    // step column, one trace per entry, one product trace per pair.
    REQUIRE(!rows_a.empty());
    CHECK(comma_fields(rows_a.front()) == 1 + 3 + 3);
    CHECK(rows_a.front().substr(0, rows_a.front().find(',')) ==
          std::to_string(100 + 7));

    cfg.seed = 4243;
    WalkStats c = run_walk(cfg, start);
    CHECK(dump_canonical(walk_stats_to_json(a)) !=
          dump_canonical(walk_stats_to_json(c)));
}

TEST_CASE("run_walk: full move set matches Haar trace moments") {
    auto spec = GroupSpec::parse("so3");
    auto start = haar_tuple("so3", 3, 449);

    WalkConfig cfg;
    cfg.spec = spec.get();
    cfg.n = 3;
    cfg.steps = 200000;
    cfg.burn_in = 2000;
    cfg.thinning = 5;
    cfg.seed = 457;

    std::vector<std::string> rows;
    WalkStats st = run_walk(cfg, start, &rows);
    CHECK(rows.size() == static_cast<size_t>(st.samples));
    CHECK(st.start_in_y);
    CHECK(st.final_in_y);

    double m1 = oracles::so3_trace_moment(1);
    double m2 = oracles::so3_trace_moment(2);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(st.mean_trace[i] - m1) <= 0.08);
        CHECK(std::abs(st.mean_trace_sq[i] - m2) <= 0.10);
    }
    // Distinct entries decorrelate, so product traces average out too.
    for (double p : st.mean_pair) CHECK(std::abs(p) <= 0.12);
}

TEST_CASE("run_walk: restricted moves reproduce a left-translation walk") {
    auto spec = GroupSpec::parse("so3");
    auto start = haar_tuple("so3", 3, 461);

    WalkConfig cfg;
    cfg.spec = spec.get();
    cfg.n = 3;
    cfg.steps = 500000;
    cfg.burn_in = 1000;
    cfg.thinning = 5;
    cfg.seed = 463;
    cfg.move_set = MoveSet::RestrictedL21L31;

    WalkStats st = run_walk(cfg, start);
    CHECK(st.samples == (500000 - 1000) / 5);
    CHECK(st.start_in_y);
    CHECK(st.final_in_y);

    // Only the first entry ever moves.
    CHECK(distance(st.final_tuple[1], start[1]) == 0.0);
    CHECK(distance(st.final_tuple[2], start[2]) == 0.0);
    CHECK(st.mean_trace[1] ==
          doctest::Approx(block_trace(start[1])).epsilon(1e-12));
    CHECK(st.mean_trace_sq[2] ==
          doctest::Approx(block_trace(start[2]) * block_trace(start[2]))
              .epsilon(1e-12));
    // Pair (1,2) is index 2 in row-major order; it is constant too.
    CHECK(st.mean_pair[2] ==
          doctest::Approx(block_trace(multiply(start[1], start[2])))
              .epsilon(1e-12));

    // Entry 0 performs g <- s g with s in {a, a^-1, b, b^-1}; an
    // independent plain-matrix walk must land on the same moments.
    Eigen::Matrix3d am = start[1].real_block(0);
    Eigen::Matrix3d bm = start[2].real_block(0);
    Eigen::Matrix3d xm = start[0].real_block(0);
    auto [om1, om2] = oracles::left_translation_walk(am, bm, xm, 500000, 1000,
                                                     5, 777);
    CHECK(std::abs(st.mean_trace[0] - om1) <= 0.06);
    CHECK(std::abs(st.mean_trace_sq[0] - om2) <= 0.08);
}

TEST_CASE("orbit_density_probe: exact hits, improvement, confinement") {
    auto start = haar_tuple("so3", 2, 467);

    auto neighbor = start;
    neighbor[0] = multiply(start[1], start[0]);
    auto far = haar_tuple("so3", 2, 479);
    double far_init = std::max(distance(start[0], far[0]),
                               distance(start[1], far[1]));

    // With no steps every probe reports the starting distance.
    auto idle = orbit_density_probe(start, {start, neighbor, far}, 0, 487);
    CHECK(idle[0] == 0.0);
    CHECK(idle[2] == doctest::Approx(far_init).epsilon(1e-12));

    auto best = orbit_density_probe(start, {start, neighbor, far}, 40, 487);
    CHECK(best[0] == 0.0);
    // The greedy pass recovers a one-move neighbor exactly.
    CHECK(best[1] <= 1e-12);
    CHECK(best[2] <= far_init + 1e-12);
    CHECK(best[2] < far_init - 0.05);

    // A commuting start confined to the z-rotation circle can never get
    // close to a generic target: every move stays inside the circle.
    std::vector<GroupElement> circle = {so3_rz(0.7), so3_rz(1.3)};
    auto tgt = haar_tuple("so3", 2, 491);
    double floor_bound = 0;
    for (int i = 0; i < 2; ++i) {
        double best_circ = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 2000; ++k) {
            double phi = 2 * M_PI * k / 2000.0;
            best_circ = std::min(best_circ, distance(so3_rz(phi), tgt[i]));
        }
        floor_bound = std::max(floor_bound, best_circ);
    }
    CHECK(floor_bound > 0.3);
    auto confined = orbit_density_probe(circle, {tgt}, 60, 499);
    CHECK(confined[0] >= floor_bound - 0.01);

    CHECK_THROWS_AS(orbit_density_probe({start[0]}, {{start[0]}}, 5, 1),
                    InputError);
    CHECK_THROWS_AS(orbit_density_probe(start, {{start[0]}}, 5, 1),
                    InputError);
}
