#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "liedeform/algebra.hpp"
#include "liedeform/config.hpp"
#include "liedeform/group.hpp"
#include "liedeform/relations.hpp"
#include "liedeform/rng.hpp"
#include "liedeform/words.hpp"

namespace liedeform {

// Orthonormal basis of ker(Ad(g) - I) in algebra coordinates.
std::vector<AlgebraElement> kernel_space(const GroupElement& g,
                                         const Thresholds& thr = {});

// True iff the fixed spaces of Ad(a) and Ad(b) intersect trivially.
// Requires both elements regular.
bool claim_check(const GroupElement& a, const GroupElement& b,
                 const Thresholds& thr = {});

// Differential of (X, Y) -> a^{exp X} b^{exp Y} at (0,0), left-trivialized
// at ab: the map Ad(b^{-1})(Ad(a^{-1}) - I) X + (Ad(b^{-1}) - I) Y.
struct ProductDifferential {
    GroupElement a;
    GroupElement b;
    Eigen::MatrixXd matrix;           // dim g x 2 dim g
    Eigen::VectorXd singular_values;  // descending, dim g of them
    int eq_rank = 0;  // rank of [(Ad(a^{-1})-I) | (Ad(b^{-1})-I)]
    double sigma_min() const {
        return singular_values[singular_values.size() - 1];
    }
};

ProductDifferential product_differential(const GroupElement& a,
                                         const GroupElement& b,
                                         const Thresholds& thr = {});

// True iff the product differential is surjective at threshold
// thr.tau_rank.  On regular pairs this agrees with claim_check; any
// discrepancy is a numerical-threshold anomaly.
bool is_product_map_open(const GroupElement& a, const GroupElement& b,
                         const Thresholds& thr = {});

struct FAWitness {
    GroupElement a_prime;
    GroupElement b_prime;
    long long order_a = 0;
    long long order_b = 0;
    long long order_ab = 0;
    GroupElement conj_a;  // a_prime = conj_a * a_torsion * conj_a^{-1}
    GroupElement conj_b;
    double deform_a = 0;  // distance from the original a
    double deform_b = 0;
    double residual = 0;
    int iterations = 0;
    std::vector<double> residual_history;
    DensityCertificate certificate;
};

// Solves a^{exp X} b^{exp Y} = torsion_project(ab, qmax) by damped
// Gauss-Newton with the min-norm step from the product differential.
// Preconditions: a, b regular torsion with claim_check true.
FAWitness solve_torsion_product(const GroupElement& a, const GroupElement& b,
                                long qmax, double delta,
                                const Thresholds& thr = {},
                                const Budgets& budgets = {});

// Worst-case distance from an element to its bounded-order torus rounding:
// sqrt(2) * pi * sqrt(total plane count) / qmax.
double torsion_projection_bound(const GroupSpec& spec, long qmax);

// Full pipeline: perturb to a regular dense-certified pair (within eps/3),
// project both to bounded-order torsion (within eps/3), then conjugate to
// make the product torsion (within eps/3).  Requires a semisimple spec.
FAWitness fa_witness(const GroupElement& a, const GroupElement& b, double eps,
                     long qmax, Rng& rng, const Thresholds& thr = {},
                     const Budgets& budgets = {});

struct Z2Result {
    GroupElement a_prime;
    GroupElement b_prime;
    GroupElement c_prime;
    Word gamma{2};
    GroupElement conjugated_a;  // gamma a' gamma^{-1}
    double dist_c = 0;          // distance from c to c'
    PairRelationScan relation_report;
    DensityCertificate certificate;
};

// Deforms (a, b, c) so that a' is regular non-torsion, (a', b') is
// dense-certified, and c' lies on a conjugate of the maximal torus of a'
// within eps of c with angle vector independent (together with 2*pi) of
// that of gamma a' gamma^{-1} up to the stated coefficient bound.
Z2Result z2_example(const GroupElement& a, const GroupElement& b,
                    const GroupElement& c, double eps, int max_len,
                    long relation_bound, long qmax, Rng& rng,
                    const Thresholds& thr = {}, const Budgets& budgets = {});

}  // namespace liedeform
