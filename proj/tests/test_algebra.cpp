#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "liedeform/algebra.hpp"
#include "liedeform/errors.hpp"
#include "liedeform/group.hpp"
#include "liedeform/words.hpp"
#include "oracles.hpp"

using namespace liedeform;

namespace {

GroupElement rz(const SpecPtr& spec, double t) {
    return oracles::so3_element(spec, oracles::rz_mat(t));
}

// Per-factor adjoint blocks of an element, for the brute-force span oracle.
std::vector<Eigen::MatrixXd> adjoint_factors(const GroupElement& g) {
    std::vector<Eigen::MatrixXd> out;
    AdjointMatrix ad = adjoint(g);
    for (int f = 0; f < g.spec().num_factors(); ++f)
        out.push_back(ad.factor(f));
    return out;
}

int oracle_span_dim(const std::vector<GroupElement>& gens, int len = 6) {
    std::vector<std::vector<Eigen::MatrixXd>> blocks;
    for (const GroupElement& g : gens) blocks.push_back(adjoint_factors(g));
    return oracles::brute_word_span_dim_blocks(blocks, len);
}

}  // namespace

TEST_CASE("span closure: base cases against brute force") {
    auto spec = GroupSpec::parse("so3");
    GroupElement id = GroupElement::identity(spec);

    SpanBasis triv = span_closure({adjoint(id)});
    CHECK(triv.dim == 1);
    CHECK(triv.ambient_dim == 9);
    CHECK_FALSE(triv.full());

    // A single rotation generates a commutative algebra: I, M, M^2 span it,
    // higher powers satisfy a linear relation.
    GroupElement q = rz(spec, M_PI / 2);
    SpanBasis single = span_closure({adjoint(q)});
    CHECK(single.dim == 3);
    CHECK(single.dim == oracle_span_dim({q}));

    Rng rng(5);
    GroupElement a = haar_sample(spec, rng), b = haar_sample(spec, rng);
    SpanBasis pair = span_closure({adjoint(a), adjoint(b)});
    CHECK(pair.dim == 9);
    CHECK(pair.full());
    CHECK(pair.dim == oracle_span_dim({a, b}));

    // Basis is orthonormal.
    CHECK((pair.basis.transpose() * pair.basis -
           Eigen::MatrixXd::Identity(pair.dim, pair.dim))
              .norm() < 1e-10);

    CHECK_THROWS_AS(span_closure({}), InputError);
    auto torus = GroupSpec::parse("torus2");
    Rng rng2(6);
    CHECK_THROWS_AS(span_closure({adjoint(haar_sample(torus, rng2))}),
                    InputError);
}

TEST_CASE("span closure equals brute-force word span on random sets") {
    Rng rng(7);
    for (const char* name : {"so3", "su2", "so3xso3"}) {
        auto spec = GroupSpec::parse(name);
        for (int trial = 0; trial < 12; ++trial) {
            int k = 1 + static_cast<int>(rng.below(3));
            std::vector<GroupElement> gens;
            std::vector<AdjointMatrix> ads;
            for (int i = 0; i < k; ++i) {
                gens.push_back(haar_sample(spec, rng));
                ads.push_back(adjoint(gens.back()));
            }
            CHECK(span_closure(ads).dim == oracle_span_dim(gens));
        }
    }
}

TEST_CASE("span closure: monotone and conjugation invariant") {
    auto spec = GroupSpec::parse("so3");
    Rng rng(9);
    GroupElement a = haar_sample(spec, rng);
    GroupElement b = haar_sample(spec, rng);
    GroupElement k = haar_sample(spec, rng);

    int d1 = span_closure({adjoint(a)}).dim;
    int d2 = span_closure({adjoint(a), adjoint(b)}).dim;
    CHECK(d1 <= d2);

    auto conj = [&](const GroupElement& g) {
        return multiply(multiply(k, g), inverse(k));
    };
    int dc = span_closure({adjoint(conj(a)), adjoint(conj(b))}).dim;
    CHECK(dc == d2);

    GroupElement q = rz(spec, M_PI / 2);
    int ds = span_closure({adjoint(q)}).dim;
    int dsc = span_closure({adjoint(conj(q))}).dim;
    CHECK(ds == dsc);
}

TEST_CASE("omega test") {
    auto spec = GroupSpec::parse("so3");
    Rng rng(11);
    GroupElement a = haar_sample(spec, rng), b = haar_sample(spec, rng);
    GroupElement g = haar_sample(spec, rng);
    GroupElement id = GroupElement::identity(spec);

    // Superset monotonicity: others already generate.
    CHECK(omega_test(id, {a, b}));
    CHECK(omega_test(g, {a, b}));
    CHECK_FALSE(omega_test(id, {id}));
    CHECK(omega_test(g, {rz(spec, 2 * M_PI / 7)}));

    // Adding helpers never flips true to false.
    if (omega_test(g, {a})) CHECK(omega_test(g, {a, b}));
}

TEST_CASE("omega tilde test") {
    auto spec = GroupSpec::parse("so3");
    Rng rng(13);
    GroupElement a = haar_sample(spec, rng), b = haar_sample(spec, rng),
                 c = haar_sample(spec, rng);
    CHECK(omega_tilde_test({a, b, c}));

    // Deleting one entry of (g, g^-1, id) always leaves a commutative set.
    GroupElement g = haar_sample(spec, rng);
    CHECK_FALSE(omega_tilde_test({g, inverse(g), GroupElement::identity(spec)}));

    // For k = 2 each singleton must generate; a single SO(3) element never
    // does.
    CHECK_FALSE(omega_tilde_test({a, b}));

    CHECK_THROWS_AS(omega_tilde_test({a}), InputError);
}

TEST_CASE("dense tuple certificate") {
    auto spec = GroupSpec::parse("so3");
    Rng rng(17);
    GroupElement a = haar_sample(spec, rng), b = haar_sample(spec, rng);

    DensityCertificate cert = dense_tuple_certificate({a, b}, 200);
    CHECK(cert.algebra_full);
    REQUIRE(cert.per_factor_nontorsion.size() == 1);
    CHECK(cert.per_factor_nontorsion[0]);
    CHECK(cert.abelian_dense);
    CHECK(cert.all_true());

    // Commuting torsion generators: every word is torsion of bounded order.
    DensityCertificate bad = dense_tuple_certificate(
        {rz(spec, 2 * M_PI / 5), rz(spec, 2 * M_PI / 7)}, 200);
    CHECK_FALSE(bad.per_factor_nontorsion[0]);
    CHECK_FALSE(bad.all_true());

    // Missing factor: second block frozen at the identity.
    auto two = GroupSpec::parse("so3xso3");
    Rng rng2(19);
    GroupElement x = haar_sample(two, rng2), y = haar_sample(two, rng2);
    auto freeze = [&](const GroupElement& g) {
        return GroupElement(two, {g.block(0),
                                  Eigen::MatrixXd(Eigen::Matrix3d::Identity())});
    };
    DensityCertificate miss =
        dense_tuple_certificate({freeze(x), freeze(y)}, 200);
    CHECK_FALSE(miss.algebra_full);
    CHECK_FALSE(miss.all_true());

    // Torus angle independence: a pair whose torus angles are rationally
    // dependent on 2pi fails the abelian criterion.
    auto st = GroupSpec::parse("so3xtorus1");
    Rng rng3(23);
    GroupElement u = haar_sample(st, rng3), v = haar_sample(st, rng3);
    auto with_angle = [&](const GroupElement& g, double t) {
        return GroupElement(
            st, {g.block(0), Eigen::MatrixXd(Eigen::Rotation2Dd(t)
                                                 .toRotationMatrix())});
    };
    DensityCertificate rational = dense_tuple_certificate(
        {with_angle(u, 2 * M_PI / 3), with_angle(v, M_PI)}, 200);
    CHECK_FALSE(rational.abelian_dense);
    DensityCertificate irr = dense_tuple_certificate(
        {with_angle(u, 1.0), with_angle(v, std::sqrt(2.0))}, 200);
    CHECK(irr.abelian_dense);
}

TEST_CASE("density smoke: certified pairs have small word covering radius") {
    auto spec = GroupSpec::parse("so3");
    Rng rng(29);
    int tested = 0;
    for (int trial = 0; trial < 8; ++trial) {
        GroupElement a = haar_sample(spec, rng), b = haar_sample(spec, rng);
        if (!dense_tuple_certificate({a, b}, 200).all_true()) continue;
        ++tested;
        for (int t = 0; t < 3; ++t) {
            GroupElement target = haar_sample(spec, rng);
            SteerResult hit = steer_to_target({a, b}, target, 14);
            CHECK(hit.dist < 0.8);
        }
    }
    CHECK(tested >= 6);
}
