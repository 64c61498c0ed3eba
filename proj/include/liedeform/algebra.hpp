#pragma once

#include <vector>

#include <Eigen/Dense>

#include "liedeform/config.hpp"
#include "liedeform/group.hpp"
#include "liedeform/words.hpp"

namespace liedeform {

// Orthonormal basis of a subspace of the block-endomorphism space
// the direct sum over i of End(g_i) over the non-torus blocks.  Vectors are stored as columns
// in stacked per-block coordinates (row-major vectorized matrices).
struct SpanBasis {
    const GroupSpec* spec = nullptr;
    Eigen::MatrixXd basis;  // ambient_dim x dim, orthonormal columns
    int dim = 0;
    int ambient_dim = 0;    // sum of (dim g_i)^2 over non-torus blocks
    bool full() const { return dim == ambient_dim; }
};

// Dimension of the direct sum of End(g_i) for the non-torus part of the spec.
int endo_dim(const GroupSpec& spec);

// Closure of the unital associative algebra generated by the given adjoint
// matrices, restricted to non-torus coordinates.  Throws InputError on an
// empty list or an all-torus spec.
SpanBasis span_closure(const std::vector<AdjointMatrix>& gens,
                       const Thresholds& thr = {});

// True iff Ad(g) together with Ad(others...) generates the full algebra.
bool omega_test(const GroupElement& g, const std::vector<GroupElement>& others,
                const Thresholds& thr = {});

// True iff every subtuple obtained by deleting one entry generates the full
// algebra.  Requires at least two entries.
bool omega_tilde_test(const std::vector<GroupElement>& gens,
                      const Thresholds& thr = {});

struct DensityCertificate {
    std::vector<GroupElement> tuple;
    bool algebra_full = false;
    std::vector<bool> per_factor_nontorsion;  // one flag per non-torus block
    std::vector<Word> nontorsion_witnesses;   // word whose projection works
    bool abelian_dense = false;               // trivially true without torus
    long qmax = 0;
    int cert_word_len = 0;
    bool all_true() const;
};

// Sufficient (never necessary) criterion for the tuple to generate a dense
// subgroup: full adjoint algebra, a word with non-torsion projection to each
// simple factor (searched up to budgets.cert_word_len), and, when torus
// blocks are present, a generator whose torus angles admit no integer
// relation with coefficients bounded by qmax.
DensityCertificate dense_tuple_certificate(const std::vector<GroupElement>& gens,
                                           long qmax,
                                           const Thresholds& thr = {},
                                           const Budgets& budgets = {});

}  // namespace liedeform
