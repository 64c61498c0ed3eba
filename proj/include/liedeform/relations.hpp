#pragma once

#include <optional>
#include <string>
#include <vector>

namespace liedeform {

// Best rational approximation p/q to x with 1 <= q <= qmax, computed from
// continued-fraction convergents and semiconvergents.  "Best" minimizes
// |x - p/q| over all admissible q.
struct Rational {
    long p = 0;
    long q = 1;
};
Rational best_rational(double x, long qmax);

// Bounded integer-relation search over angles in radians: does some nonzero
// integer vector c with |c_i| <= bound satisfy sum_i c_i x_i = 2*pi*k within
// tol, for some integer |k| <= bound?  Small instances are enumerated
// exactly; larger ones fall back to an LLL lattice reduction screen whose
// candidates are verified before being reported.
struct RelationHit {
    std::vector<long> coeffs;  // same length as x
    long round_term = 0;       // coefficient absorbed into the lattice Z
    double residual = 0.0;
};

struct RelationScan {
    bool relation_found = false;
    RelationHit hit;              // valid when relation_found
    double min_residual = 0.0;    // best residual seen (enumeration only)
    std::vector<long> argmin;     // coefficients of min_residual
    std::string method;           // "enumeration" or "lll"
    long bound = 0;
    double tol = 0.0;
};

RelationScan find_integer_relation(const std::vector<double>& x, long bound,
                                   double tol);

// Simultaneous per-coordinate relation test for two angle vectors living on
// a common torus: search (m, n) != (0, 0) with |m|, |n| <= bound such that
// m*theta_j + n*alpha_j is within tol of a multiple of 2*pi for every j.
// This is the obstruction to <u, v> being free abelian of rank 2.
struct PairRelationScan {
    bool relation_found = false;
    long m = 0, n = 0;          // valid when relation_found
    double min_residual = 0.0;  // max-over-coordinates residual at argmin
    long argmin_m = 0, argmin_n = 0;
    long bound = 0;
    double tol = 0.0;
    long pairs_checked = 0;
};

PairRelationScan find_pair_relation(const std::vector<double>& theta,
                                    const std::vector<double>& alpha,
                                    long bound, double tol);

}  // namespace liedeform
