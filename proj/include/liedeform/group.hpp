#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "liedeform/config.hpp"
#include "liedeform/rng.hpp"

namespace liedeform {

// ---------------------------------------------------------------------------
// Specs.  A group is a direct product of blocks, each block one of
//   SO(k) for 3 <= k <= 6   (real k x k, special orthogonal)
//   SU(2)                   (complex 2 x 2, special unitary)
//   Torus(m) for 1 <= m <= 4 (m independent 2 x 2 rotation blocks, kept as a
//                             block-diagonal real 2m x 2m matrix)
// ---------------------------------------------------------------------------

enum class BlockKind { SOn, SU2, Torus };

struct Block {
    BlockKind kind;
    int param;  // k for SO(k), m for Torus(m), unused (2) for SU(2)

    bool operator==(const Block&) const = default;

    bool is_torus() const { return kind == BlockKind::Torus; }
    // Side length of the stored matrix.
    int matrix_dim() const;
    // Dimension of the block's Lie algebra.
    int algebra_dim() const;
    // Rank (dimension of a maximal torus of the block).
    int rank() const;
    std::string name() const;
};

class GroupSpec;
using SpecPtr = std::shared_ptr<const GroupSpec>;

class GroupSpec {
  public:
    explicit GroupSpec(std::vector<Block> blocks);

    // Parses e.g. "so3", "su2", "torus2", "so3xso3", "so3xtorus1".
    static SpecPtr parse(const std::string& text);
    static SpecPtr make(std::vector<Block> blocks);

    const std::vector<Block>& blocks() const { return blocks_; }
    const Block& block(int b) const { return blocks_[b]; }
    int num_blocks() const { return static_cast<int>(blocks_.size()); }
    int algebra_dim() const { return algebra_dim_; }
    int matrix_dim() const { return matrix_dim_; }
    // Offset of a block's coordinates inside a full algebra vector.
    int algebra_offset(int b) const { return algebra_offsets_[b]; }
    // Number of non-torus blocks (the factors the adjoint algebra acts on).
    int num_factors() const { return static_cast<int>(factor_blocks_.size()); }
    // Block index of the i-th non-torus factor.
    int factor_block(int i) const { return factor_blocks_[i]; }
    bool has_torus() const;
    bool semisimple() const { return !has_torus(); }
    // Total number of independent rotation angles on the torus blocks.
    int torus_angles() const;
    // Dimension of the flat inner-product embedding used for fast scans.
    int flat_dim() const { return flat_dim_; }
    // Largest possible Frobenius distance between two elements.
    double diameter() const;

    std::string name() const;
    bool operator==(const GroupSpec& o) const { return blocks_ == o.blocks_; }

  private:
    std::vector<Block> blocks_;
    std::vector<int> algebra_offsets_;
    std::vector<int> factor_blocks_;
    int algebra_dim_ = 0;
    int matrix_dim_ = 0;
    int flat_dim_ = 0;
};

// Throws InputError unless the two elements share an equal spec.
void require_same_spec(const GroupSpec& a, const GroupSpec& b,
                       const char* where);

// ---------------------------------------------------------------------------
// Elements.
// ---------------------------------------------------------------------------

using BlockMatrix = std::variant<Eigen::MatrixXd, Eigen::Matrix2cd>;

class GroupElement {
  public:
    GroupElement() = default;
    GroupElement(SpecPtr spec, std::vector<BlockMatrix> blocks);

    static GroupElement identity(SpecPtr spec);

    const GroupSpec& spec() const { return *spec_; }
    const SpecPtr& spec_ptr() const { return spec_; }
    const BlockMatrix& block(int b) const { return blocks_[b]; }
    const Eigen::MatrixXd& real_block(int b) const;
    const Eigen::Matrix2cd& su2_block(int b) const;

    // Worst per-block deviation from exact orthogonality / unitarity.
    double orthogonality_residual() const;
    // Projects each block back onto the group manifold (polar for real
    // blocks, quaternion normalization for SU(2), per-circle angle snap for
    // torus blocks).
    void renormalize();

    int mults_since_renormalize = 0;

  private:
    SpecPtr spec_;
    std::vector<BlockMatrix> blocks_;
};

GroupElement multiply(const GroupElement& a, const GroupElement& b);
GroupElement inverse(const GroupElement& g);
inline GroupElement operator*(const GroupElement& a, const GroupElement& b) {
    return multiply(a, b);
}

// Frobenius distance on the block-diagonal embedding; bi-invariant.
double distance(const GroupElement& a, const GroupElement& b);
double distance_to_identity(const GroupElement& g);
// Real inner product <a, b> = Re sum conj(a_ij) b_ij over all blocks.
// distance(a,b)^2 == 2 * matrix_dim - 2 * inner(a,b) for group elements.
double inner(const GroupElement& a, const GroupElement& b);

// Flat real vector with ||flat(a) - flat(b)|| == distance(a, b); complex
// entries are split into re/im, torus blocks contribute only their 2x2
// diagonal rotation entries.
Eigen::VectorXd flatten(const GroupElement& g);

GroupElement power(const GroupElement& g, long exponent);

// ---------------------------------------------------------------------------
// Lie algebra.  Coordinates are taken in a fixed orthonormal basis: for
// so(k) the elementary skew matrices (E_ij - E_ji)/sqrt(2) with i < j in
// lexicographic order; for su(2) the unit-norm skew-Hermitian traceless
// triple i*sigma_x/sqrt(2), i*sigma_y/sqrt(2), i*sigma_z/sqrt(2); for a
// torus each circle's generator [[0,-1],[1,0]]/sqrt(2).  Coordinate 2-norm
// equals matrix Frobenius norm.
// ---------------------------------------------------------------------------

struct AlgebraElement {
    SpecPtr spec;
    Eigen::VectorXd coords;
};

AlgebraElement algebra_zero(SpecPtr spec);
// Matrix realization of one block of an algebra element.
BlockMatrix algebra_block_matrix(const AlgebraElement& x, int b);
// Projection of an arbitrary per-block matrix set onto algebra coordinates.
AlgebraElement algebra_from_blocks(SpecPtr spec,
                                   const std::vector<BlockMatrix>& mats);

GroupElement exp_map(const AlgebraElement& x);
// Principal logarithm.  Throws CutLocusError if any eigenangle is within
// tau_cut of pi.
AlgebraElement log_map(const GroupElement& g, const Thresholds& tau = {});

// ---------------------------------------------------------------------------
// Adjoint.
// ---------------------------------------------------------------------------

// Matrix of X -> g X g^{-1} in the orthonormal basis above: orthogonal,
// block-diagonal per spec block, identity on torus coordinates.
struct AdjointMatrix {
    SpecPtr spec;
    Eigen::MatrixXd mat;  // algebra_dim x algebra_dim

    // Sub-block acting on the i-th non-torus factor.
    Eigen::MatrixXd factor(int i) const;
};

AdjointMatrix adjoint(const GroupElement& g);

// ---------------------------------------------------------------------------
// Sampling and structure probes.
// ---------------------------------------------------------------------------

GroupElement haar_sample(SpecPtr spec, Rng& rng);

// True iff on every non-torus block the fixed space of Ad(g) has dimension
// equal to the block's rank (singular values of Ad - I below tau_rank count
// as zero).
bool is_regular(const GroupElement& g, const Thresholds& tau = {});

// Least q <= qmax with distance(g^q, identity) <= tau_torsion, or no such q.
struct TorsionResult {
    bool is_torsion = false;
    int order = 0;  // valid when is_torsion
    int qmax = 0;   // the searched bound
};
TorsionResult torsion_order(const GroupElement& g, int qmax,
                            const Thresholds& tau = {});

// Maximal torus through a regular element: an orthonormal frame per block in
// which the element is a direct sum of 2x2 rotations (plus a fixed +1 axis
// for odd SO(k)).  Torus members are parametrized by one angle per rotation
// plane; su2 blocks contribute their rotation axis.
struct TorusFrame {
    SpecPtr spec;
    // Per block: for real blocks an orthogonal frame Q such that Q^T g Q is
    // the angle normal form; for su2 the unit axis vector n.
    std::vector<Eigen::MatrixXd> frames;  // empty matrix for su2 blocks
    std::vector<Eigen::Vector3d> axes;    // only meaningful for su2 blocks
    // Angles of the defining element, one entry per rotation plane, blocks
    // concatenated in order.
    std::vector<double> base_angles;

    int num_angles() const { return static_cast<int>(base_angles.size()); }
    GroupElement element(const std::vector<double>& angles) const;
    // Nearest torus member to c: optimal angles and achieved distance.
    std::pair<std::vector<double>, double> nearest(const GroupElement& c) const;
    // Frame conjugated by v, i.e. the torus v T v^{-1}.
    TorusFrame conjugated(const GroupElement& v) const;
};

// Throws InputError if g is not regular.
TorusFrame maximal_torus(const GroupElement& g, const Thresholds& tau = {});

// Rotation angles of g in its own torus frame, in (-pi, pi].
std::vector<double> rotation_angles(const GroupElement& g,
                                    const Thresholds& tau = {});

// Nearest element of g's maximal torus whose rotation angles are all
// rational multiples of 2*pi with denominator <= qmax; g must be regular.
// The result is torsion of order lcm of the denominators and lies within
// sqrt(2) * pi * sqrt(plane count) / qmax of g (worst-case Farey gap).
struct TorsionProjection {
    GroupElement value;
    long long order;              // exact torsion order of value
    std::vector<int> numerators;  // per rotation plane
    std::vector<int> denominators;
};
TorsionProjection torsion_project(const GroupElement& g, int qmax,
                                  const Thresholds& tau = {});

// The i-th non-torus factor of g as a single-block element.
GroupElement project_to_factor(const GroupElement& g, int factor);

// Circle angles of the torus blocks only (in block order), no regularity
// assumption; empty for semisimple specs.
std::vector<double> torus_block_angles(const GroupElement& g);

// Perturbation helper: g * exp(x) with x a Gaussian algebra element scaled
// to Frobenius norm `radius`.
GroupElement perturb(const GroupElement& g, double radius, Rng& rng);

}  // namespace liedeform
