#include "liedeform/group.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>

#include "liedeform/errors.hpp"
#include "liedeform/relations.hpp"

namespace liedeform {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Pauli matrices; the su(2) basis is i*sigma_j / sqrt(2).
Eigen::Matrix2cd sigma(int j) {
    using namespace std::complex_literals;
    Eigen::Matrix2cd s;
    switch (j) {
        case 0: s << 0, 1, 1, 0; break;
        case 1: s << 0, -1i, 1i, 0; break;
        default: s << 1, 0, 0, -1; break;
    }
    return s;
}

Eigen::Matrix2d rot2(double theta) {
    Eigen::Matrix2d r;
    r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return r;
}

// Quaternion coordinates (a0, a1, a2, a3) of a matrix of SU(2) shape:
// U = a0*I + i*(a1*sx + a2*sy + a3*sz).
Eigen::Vector4d quat_of(const Eigen::Matrix2cd& u) {
    Eigen::Vector4d a;
    a[0] = 0.5 * (u(0, 0).real() + u(1, 1).real());
    a[1] = 0.5 * (u(0, 1).imag() + u(1, 0).imag());
    a[2] = 0.5 * (u(0, 1).real() - u(1, 0).real());
    a[3] = 0.5 * (u(0, 0).imag() - u(1, 1).imag());
    return a;
}

Eigen::Matrix2cd su2_of_quat(const Eigen::Vector4d& a) {
    using namespace std::complex_literals;
    Eigen::Matrix2cd u;
    u(0, 0) = a[0] + 1i * a[3];
    u(0, 1) = a[2] + 1i * a[1];
    u(1, 0) = -a[2] + 1i * a[1];
    u(1, 1) = a[0] - 1i * a[3];
    return u;
}

long long lcm_ll(long long a, long long b) { return a / std::gcd(a, b) * b; }

}  // namespace

// ---------------------------------------------------------------------------
// Block / GroupSpec
// ---------------------------------------------------------------------------

int Block::matrix_dim() const {
    switch (kind) {
        case BlockKind::SOn: return param;
        case BlockKind::SU2: return 2;
        default: return 2 * param;
    }
}

int Block::algebra_dim() const {
    switch (kind) {
        case BlockKind::SOn: return param * (param - 1) / 2;
        case BlockKind::SU2: return 3;
        default: return param;
    }
}

int Block::rank() const {
    switch (kind) {
        case BlockKind::SOn: return param / 2;
        case BlockKind::SU2: return 1;
        default: return param;
    }
}

std::string Block::name() const {
    switch (kind) {
        case BlockKind::SOn: return "so" + std::to_string(param);
        case BlockKind::SU2: return "su2";
        default: return "torus" + std::to_string(param);
    }
}

GroupSpec::GroupSpec(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw InputError("spec needs at least one block");
    for (int b = 0; b < num_blocks(); ++b) {
        const Block& blk = blocks_[b];
        if (blk.kind == BlockKind::SOn && (blk.param < 3 || blk.param > 6))
            throw InputError("so(k) supported for 3 <= k <= 6");
        if (blk.kind == BlockKind::Torus && (blk.param < 1 || blk.param > 4))
            throw InputError("torus(m) supported for 1 <= m <= 4");
        algebra_offsets_.push_back(algebra_dim_);
        algebra_dim_ += blk.algebra_dim();
        matrix_dim_ += blk.matrix_dim();
        if (!blk.is_torus()) factor_blocks_.push_back(b);
        // Flat embedding: every structurally nonzero real degree of freedom.
        if (blk.kind == BlockKind::SOn)
            flat_dim_ += blk.param * blk.param;
        else if (blk.kind == BlockKind::SU2)
            flat_dim_ += 8;
        else
            flat_dim_ += 4 * blk.param;
    }
}

SpecPtr GroupSpec::make(std::vector<Block> blocks) {
    return std::make_shared<const GroupSpec>(std::move(blocks));
}

SpecPtr GroupSpec::parse(const std::string& text) {
    std::vector<Block> blocks;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t next = text.find('x', pos);
        // 'x' inside "torus..." never occurs; names are so#, su2, torus#.
        std::string tok = text.substr(
            pos, next == std::string::npos ? std::string::npos : next - pos);
        if (tok.rfind("so", 0) == 0 && tok.size() == 3 &&
            std::isdigit(static_cast<unsigned char>(tok[2]))) {
            blocks.push_back({BlockKind::SOn, tok[2] - '0'});
        } else if (tok == "su2") {
            blocks.push_back({BlockKind::SU2, 2});
        } else if (tok.rfind("torus", 0) == 0 && tok.size() == 6 &&
                   std::isdigit(static_cast<unsigned char>(tok[5]))) {
            blocks.push_back({BlockKind::Torus, tok[5] - '0'});
        } else {
            throw InputError("unrecognized block '" + tok + "' in spec '" +
                             text + "'");
        }
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return make(std::move(blocks));
}

bool GroupSpec::has_torus() const {
    return factor_blocks_.size() != blocks_.size();
}

int GroupSpec::torus_angles() const {
    int m = 0;
    for (const Block& b : blocks_)
        if (b.is_torus()) m += b.param;
    return m;
}

double GroupSpec::diameter() const {
    double d2 = 0;
    for (const Block& b : blocks_) {
        switch (b.kind) {
            case BlockKind::SOn:
                // -I for even k, rotations by pi in all planes for odd k.
                d2 += 4.0 * (b.param % 2 == 0 ? b.param : b.param - 1);
                break;
            case BlockKind::SU2: d2 += 8.0; break;
            default: d2 += 8.0 * b.param; break;
        }
    }
    return std::sqrt(d2);
}

std::string GroupSpec::name() const {
    std::string out;
    for (int b = 0; b < num_blocks(); ++b) {
        if (b) out += "x";
        out += blocks_[b].name();
    }
    return out;
}

void require_same_spec(const GroupSpec& a, const GroupSpec& b,
                       const char* where) {
    if (!(a == b))
        throw InputError(std::string(where) + ": spec mismatch (" + a.name() +
                         " vs " + b.name() + ")");
}

// ---------------------------------------------------------------------------
// GroupElement basics
// ---------------------------------------------------------------------------

GroupElement::GroupElement(SpecPtr spec, std::vector<BlockMatrix> blocks)
    : spec_(std::move(spec)), blocks_(std::move(blocks)) {
    if (static_cast<int>(blocks_.size()) != spec_->num_blocks())
        throw InputError("element block count does not match spec");
}

GroupElement GroupElement::identity(SpecPtr spec) {
    std::vector<BlockMatrix> blocks;
    for (const Block& b : spec->blocks()) {
        if (b.kind == BlockKind::SU2)
            blocks.emplace_back(Eigen::Matrix2cd::Identity().eval());
        else
            blocks.emplace_back(
                Eigen::MatrixXd::Identity(b.matrix_dim(), b.matrix_dim())
                    .eval());
    }
    return GroupElement(std::move(spec), std::move(blocks));
}

const Eigen::MatrixXd& GroupElement::real_block(int b) const {
    return std::get<Eigen::MatrixXd>(blocks_[b]);
}

const Eigen::Matrix2cd& GroupElement::su2_block(int b) const {
    return std::get<Eigen::Matrix2cd>(blocks_[b]);
}

double GroupElement::orthogonality_residual() const {
    double worst = 0;
    for (int b = 0; b < spec_->num_blocks(); ++b) {
        if (std::holds_alternative<Eigen::MatrixXd>(blocks_[b])) {
            const auto& m = real_block(b);
            worst = std::max(
                worst, (m.transpose() * m -
                        Eigen::MatrixXd::Identity(m.rows(), m.cols()))
                           .norm());
        } else {
            const auto& u = su2_block(b);
            worst = std::max(
                worst,
                (u.adjoint() * u - Eigen::Matrix2cd::Identity()).norm());
        }
    }
    return worst;
}

void GroupElement::renormalize() {
    for (int b = 0; b < spec_->num_blocks(); ++b) {
        const Block& blk = spec_->blocks()[b];
        if (blk.kind == BlockKind::SOn) {
            auto& m = std::get<Eigen::MatrixXd>(blocks_[b]);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(
                m, Eigen::ComputeFullU | Eigen::ComputeFullV);
            Eigen::MatrixXd p = svd.matrixU() * svd.matrixV().transpose();
            if (p.determinant() < 0) {
                // cannot happen from small drift, but keep the projection
                // inside SO(k) regardless
                Eigen::MatrixXd u = svd.matrixU();
                u.col(u.cols() - 1) *= -1.0;
                p = u * svd.matrixV().transpose();
            }
            m = p;
        } else if (blk.kind == BlockKind::SU2) {
            auto& u = std::get<Eigen::Matrix2cd>(blocks_[b]);
            Eigen::Vector4d a = quat_of(u);
            u = su2_of_quat(a / a.norm());
        } else {
            // Snap each circle back to an exact rotation, clearing any
            // off-block drift as well.
            auto& m = std::get<Eigen::MatrixXd>(blocks_[b]);
            Eigen::MatrixXd clean = Eigen::MatrixXd::Zero(m.rows(), m.cols());
            for (int c = 0; c < blk.param; ++c) {
                double th = std::atan2(m(2 * c + 1, 2 * c) - m(2 * c, 2 * c + 1),
                                       m(2 * c, 2 * c) + m(2 * c + 1, 2 * c + 1));
                clean.block<2, 2>(2 * c, 2 * c) = rot2(th);
            }
            m = clean;
        }
    }
    mults_since_renormalize = 0;
}

GroupElement multiply(const GroupElement& a, const GroupElement& b) {
    require_same_spec(a.spec(), b.spec(), "multiply");
    std::vector<BlockMatrix> blocks;
    blocks.reserve(a.spec().num_blocks());
    for (int i = 0; i < a.spec().num_blocks(); ++i) {
        if (std::holds_alternative<Eigen::MatrixXd>(a.block(i)))
            blocks.emplace_back((a.real_block(i) * b.real_block(i)).eval());
        else
            blocks.emplace_back((a.su2_block(i) * b.su2_block(i)).eval());
    }
    GroupElement out(a.spec_ptr(), std::move(blocks));
    out.mults_since_renormalize =
        std::max(a.mults_since_renormalize, b.mults_since_renormalize) + 1;
    const Thresholds tau;
    if (out.mults_since_renormalize >= 64 ||
        out.orthogonality_residual() > tau.tau_orth / 10.0)
        out.renormalize();
    return out;
}

GroupElement inverse(const GroupElement& g) {
    std::vector<BlockMatrix> blocks;
    blocks.reserve(g.spec().num_blocks());
    for (int i = 0; i < g.spec().num_blocks(); ++i) {
        if (std::holds_alternative<Eigen::MatrixXd>(g.block(i)))
            blocks.emplace_back(Eigen::MatrixXd(g.real_block(i).transpose()));
        else
            blocks.emplace_back(Eigen::Matrix2cd(g.su2_block(i).adjoint()));
    }
    GroupElement out(g.spec_ptr(), std::move(blocks));
    out.mults_since_renormalize = g.mults_since_renormalize;
    return out;
}

double inner(const GroupElement& a, const GroupElement& b) {
    require_same_spec(a.spec(), b.spec(), "inner");
    double s = 0;
    for (int i = 0; i < a.spec().num_blocks(); ++i) {
        if (std::holds_alternative<Eigen::MatrixXd>(a.block(i)))
            s += a.real_block(i).cwiseProduct(b.real_block(i)).sum();
        else
            s += a.su2_block(i)
                     .conjugate()
                     .cwiseProduct(b.su2_block(i))
                     .sum()
                     .real();
    }
    return s;
}

double distance(const GroupElement& a, const GroupElement& b) {
    require_same_spec(a.spec(), b.spec(), "distance");
    double s = 0;
    for (int i = 0; i < a.spec().num_blocks(); ++i) {
        if (std::holds_alternative<Eigen::MatrixXd>(a.block(i)))
            s += (a.real_block(i) - b.real_block(i)).squaredNorm();
        else
            s += (a.su2_block(i) - b.su2_block(i)).squaredNorm();
    }
    return std::sqrt(s);
}

double distance_to_identity(const GroupElement& g) {
    return distance(g, GroupElement::identity(g.spec_ptr()));
}

Eigen::VectorXd flatten(const GroupElement& g) {
    Eigen::VectorXd v(g.spec().flat_dim());
    int at = 0;
    for (int b = 0; b < g.spec().num_blocks(); ++b) {
        const Block& blk = g.spec().blocks()[b];
        if (blk.kind == BlockKind::SOn) {
            const auto& m = g.real_block(b);
            for (int r = 0; r < m.rows(); ++r)
                for (int c = 0; c < m.cols(); ++c) v[at++] = m(r, c);
        } else if (blk.kind == BlockKind::SU2) {
            const auto& u = g.su2_block(b);
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c) {
                    v[at++] = u(r, c).real();
                    v[at++] = u(r, c).imag();
                }
        } else {
            const auto& m = g.real_block(b);
            for (int c = 0; c < blk.param; ++c) {
                v[at++] = m(2 * c, 2 * c);
                v[at++] = m(2 * c, 2 * c + 1);
                v[at++] = m(2 * c + 1, 2 * c);
                v[at++] = m(2 * c + 1, 2 * c + 1);
            }
        }
    }
    return v;
}

GroupElement power(const GroupElement& g, long exponent) {
    if (exponent < 0) return power(inverse(g), -exponent);
    GroupElement acc = GroupElement::identity(g.spec_ptr());
    GroupElement base = g;
    long e = exponent;
    while (e > 0) {
        if (e & 1) acc = multiply(acc, base);
        e >>= 1;
        if (e) base = multiply(base, base);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Algebra coordinates
// ---------------------------------------------------------------------------

AlgebraElement algebra_zero(SpecPtr spec) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(spec->algebra_dim());
    return {std::move(spec), std::move(c)};
}

BlockMatrix algebra_block_matrix(const AlgebraElement& x, int b) {
    const Block& blk = x.spec->blocks()[b];
    const int off = x.spec->algebra_offset(b);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    if (blk.kind == BlockKind::SOn) {
        const int k = blk.param;
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
        int idx = 0;
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j, ++idx) {
                m(i, j) += x.coords[off + idx] * inv_sqrt2;
                m(j, i) -= x.coords[off + idx] * inv_sqrt2;
            }
        return m;
    }
    if (blk.kind == BlockKind::SU2) {
        using namespace std::complex_literals;
        Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
        for (int j = 0; j < 3; ++j)
            m += (1i * x.coords[off + j] * inv_sqrt2) * sigma(j);
        return Eigen::Matrix2cd(m);
    }
    Eigen::MatrixXd m =
        Eigen::MatrixXd::Zero(blk.matrix_dim(), blk.matrix_dim());
    for (int c = 0; c < blk.param; ++c) {
        double th = x.coords[off + c] * inv_sqrt2;
        m(2 * c, 2 * c + 1) = -th;
        m(2 * c + 1, 2 * c) = th;
    }
    return m;
}

AlgebraElement algebra_from_blocks(SpecPtr spec,
                                   const std::vector<BlockMatrix>& mats) {
    AlgebraElement x = algebra_zero(spec);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int b = 0; b < spec->num_blocks(); ++b) {
        const Block& blk = spec->blocks()[b];
        const int off = spec->algebra_offset(b);
        if (blk.kind == BlockKind::SOn) {
            const auto& m = std::get<Eigen::MatrixXd>(mats[b]);
            int idx = 0;
            for (int i = 0; i < blk.param; ++i)
                for (int j = i + 1; j < blk.param; ++j, ++idx)
                    x.coords[off + idx] = (m(i, j) - m(j, i)) * inv_sqrt2;
        } else if (blk.kind == BlockKind::SU2) {
            const auto& m = std::get<Eigen::Matrix2cd>(mats[b]);
            for (int j = 0; j < 3; ++j) {
                using namespace std::complex_literals;
                std::complex<double> t =
                    ((-1i) * (sigma(j) * m).trace()) * inv_sqrt2;
                x.coords[off + j] = t.real();
            }
        } else {
            const auto& m = std::get<Eigen::MatrixXd>(mats[b]);
            for (int c = 0; c < blk.param; ++c)
                x.coords[off + c] =
                    (m(2 * c + 1, 2 * c) - m(2 * c, 2 * c + 1)) * inv_sqrt2;
        }
    }
    return x;
}

GroupElement exp_map(const AlgebraElement& x) {
    std::vector<BlockMatrix> blocks;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int b = 0; b < x.spec->num_blocks(); ++b) {
        const Block& blk = x.spec->blocks()[b];
        if (blk.kind == BlockKind::SOn) {
            Eigen::MatrixXd m =
                std::get<Eigen::MatrixXd>(algebra_block_matrix(x, b));
            blocks.emplace_back(m.exp().eval());
        } else if (blk.kind == BlockKind::SU2) {
            const int off = x.spec->algebra_offset(b);
            Eigen::Vector3d v;
            for (int j = 0; j < 3; ++j) v[j] = x.coords[off + j] * inv_sqrt2;
            double th = v.norm();
            Eigen::Vector4d q;
            double sinc = th < 1e-12 ? 1.0 : std::sin(th) / th;
            q << std::cos(th), sinc * v[0], sinc * v[1], sinc * v[2];
            blocks.emplace_back(su2_of_quat(q));
        } else {
            const int off = x.spec->algebra_offset(b);
            Eigen::MatrixXd m =
                Eigen::MatrixXd::Zero(blk.matrix_dim(), blk.matrix_dim());
            for (int c = 0; c < blk.param; ++c)
                m.block<2, 2>(2 * c, 2 * c) =
                    rot2(x.coords[off + c] * inv_sqrt2);
            blocks.emplace_back(std::move(m));
        }
    }
    return GroupElement(x.spec, std::move(blocks));
}

namespace {

// Plane decomposition of one real orthogonal block: pairs of column indices
// of an orthogonal frame with a rotation angle each, plus fixed +1 axes.
struct PlaneForm {
    Eigen::MatrixXd frame;        // orthogonal, columns reordered
    std::vector<double> angles;   // one per plane; planes occupy columns 2j,2j+1
    int fixed_axes = 0;           // trailing columns with eigenvalue +1
};

PlaneForm plane_form(const Eigen::MatrixXd& m) {
    const int k = static_cast<int>(m.rows());
    Eigen::RealSchur<Eigen::MatrixXd> schur(m);
    const Eigen::MatrixXd& t = schur.matrixT();
    const Eigen::MatrixXd& q = schur.matrixU();

    std::vector<std::pair<int, double>> planes;  // (start col, angle)
    std::vector<int> plus_axes, minus_axes;
    int i = 0;
    while (i < k) {
        if (i + 1 < k && std::abs(t(i + 1, i)) > 1e-9) {
            planes.emplace_back(i, std::atan2(t(i + 1, i), t(i, i)));
            i += 2;
        } else {
            (t(i, i) > 0 ? plus_axes : minus_axes).push_back(i);
            ++i;
        }
    }
    // A pair of -1 eigenvalues is a rotation by pi in the plane they span.
    if (minus_axes.size() % 2 != 0)
        throw Error("orthogonal block with odd count of -1 eigenvalues");
    // For even k, +1 eigenvalues pair into angle-0 planes; odd k keeps one
    // fixed axis.
    PlaneForm out;
    out.frame.resize(k, k);
    int col = 0;
    for (auto& [start, ang] : planes) {
        out.frame.col(col++) = q.col(start);
        out.frame.col(col++) = q.col(start + 1);
        out.angles.push_back(ang);
    }
    for (size_t j = 0; j + 1 < minus_axes.size(); j += 2) {
        out.frame.col(col++) = q.col(minus_axes[j]);
        out.frame.col(col++) = q.col(minus_axes[j + 1]);
        out.angles.push_back(kPi);
    }
    size_t keep_fixed = plus_axes.size() % 2;  // odd k leaves one axis
    for (size_t j = 0; j + 1 < plus_axes.size(); j += 2) {
        out.frame.col(col++) = q.col(plus_axes[j]);
        out.frame.col(col++) = q.col(plus_axes[j + 1]);
        out.angles.push_back(0.0);
    }
    if (keep_fixed) out.frame.col(col++) = q.col(plus_axes.back());
    out.fixed_axes = static_cast<int>(keep_fixed);
    return out;
}

}  // namespace

AlgebraElement log_map(const GroupElement& g, const Thresholds& tau) {
    std::vector<BlockMatrix> mats;
    for (int b = 0; b < g.spec().num_blocks(); ++b) {
        const Block& blk = g.spec().blocks()[b];
        if (blk.kind == BlockKind::SOn) {
            PlaneForm pf = plane_form(g.real_block(b));
            const int k = blk.param;
            Eigen::MatrixXd s = Eigen::MatrixXd::Zero(k, k);
            for (size_t j = 0; j < pf.angles.size(); ++j) {
                double th = pf.angles[j];
                if (std::abs(th) >= kPi - tau.tau_cut)
                    throw CutLocusError("log_map: eigenangle at cut locus");
                s(2 * j, 2 * j + 1) = -th;
                s(2 * j + 1, 2 * j) = th;
            }
            mats.emplace_back(
                Eigen::MatrixXd(pf.frame * s * pf.frame.transpose()));
        } else if (blk.kind == BlockKind::SU2) {
            Eigen::Vector4d a = quat_of(g.su2_block(b));
            double vn = a.tail<3>().norm();
            double th = std::atan2(vn, a[0]);
            if (th >= kPi - tau.tau_cut)
                throw CutLocusError("log_map: su2 eigenangle at cut locus");
            Eigen::Vector3d v = vn < 1e-300
                                    ? Eigen::Vector3d::Zero()
                                    : Eigen::Vector3d(a.tail<3>() * (th / vn));
            using namespace std::complex_literals;
            Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
            for (int j = 0; j < 3; ++j) m += (1i * v[j]) * sigma(j);
            mats.emplace_back(std::move(m));
        } else {
            const auto& m = g.real_block(b);
            Eigen::MatrixXd s =
                Eigen::MatrixXd::Zero(blk.matrix_dim(), blk.matrix_dim());
            for (int c = 0; c < blk.param; ++c) {
                double th =
                    std::atan2(m(2 * c + 1, 2 * c) - m(2 * c, 2 * c + 1),
                               m(2 * c, 2 * c) + m(2 * c + 1, 2 * c + 1));
                if (std::abs(th) >= kPi - tau.tau_cut)
                    throw CutLocusError(
                        "log_map: torus angle at cut locus");
                s(2 * c, 2 * c + 1) = -th;
                s(2 * c + 1, 2 * c) = th;
            }
            mats.emplace_back(std::move(s));
        }
    }
    return algebra_from_blocks(g.spec_ptr(), mats);
}

// ---------------------------------------------------------------------------
// Adjoint
// ---------------------------------------------------------------------------

Eigen::MatrixXd AdjointMatrix::factor(int i) const {
    const int b = spec->factor_block(i);
    const int off = spec->algebra_offset(b);
    const int d = spec->blocks()[b].algebra_dim();
    return mat.block(off, off, d, d);
}

AdjointMatrix adjoint(const GroupElement& g) {
    const GroupSpec& spec = g.spec();
    Eigen::MatrixXd ad =
        Eigen::MatrixXd::Identity(spec.algebra_dim(), spec.algebra_dim());
    for (int b = 0; b < spec.num_blocks(); ++b) {
        const Block& blk = spec.blocks()[b];
        const int off = spec.algebra_offset(b);
        if (blk.kind == BlockKind::SOn) {
            // Ad entry for row pair (p,q), column pair (i,j) is the 2x2
            // minor g(p,i)g(q,j) - g(p,j)g(q,i).
            const auto& m = g.real_block(b);
            const int k = blk.param;
            int colidx = 0;
            for (int i = 0; i < k; ++i)
                for (int j = i + 1; j < k; ++j, ++colidx) {
                    int rowidx = 0;
                    for (int p = 0; p < k; ++p)
                        for (int q = p + 1; q < k; ++q, ++rowidx)
                            ad(off + rowidx, off + colidx) =
                                m(p, i) * m(q, j) - m(p, j) * m(q, i);
                }
        } else if (blk.kind == BlockKind::SU2) {
            const auto& u = g.su2_block(b);
            for (int jc = 0; jc < 3; ++jc) {
                Eigen::Matrix2cd conj = u * sigma(jc) * u.adjoint();
                for (int jr = 0; jr < 3; ++jr)
                    ad(off + jr, off + jc) =
                        0.5 * (sigma(jr) * conj).trace().real();
            }
        }
        // torus blocks: identity, already in place
    }
    return {g.spec_ptr(), std::move(ad)};
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

GroupElement haar_sample(SpecPtr spec, Rng& rng) {
    std::vector<BlockMatrix> blocks;
    for (const Block& blk : spec->blocks()) {
        if (blk.kind == BlockKind::SOn) {
            const int k = blk.param;
            Eigen::MatrixXd a(k, k);
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) a(i, j) = rng.gaussian();
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
            Eigen::MatrixXd q = qr.householderQ();
            Eigen::MatrixXd r = qr.matrixQR();
            // Fix the sign ambiguity of QR so q is Haar on O(k), then land
            // in SO(k) by flipping the last column of det -1 samples.
            for (int j = 0; j < k; ++j)
                if (r(j, j) < 0) q.col(j) *= -1.0;
            if (q.determinant() < 0) q.col(k - 1) *= -1.0;
            blocks.emplace_back(std::move(q));
        } else if (blk.kind == BlockKind::SU2) {
            Eigen::Vector4d a;
            for (int i = 0; i < 4; ++i) a[i] = rng.gaussian();
            blocks.emplace_back(su2_of_quat(a / a.norm()));
        } else {
            Eigen::MatrixXd m =
                Eigen::MatrixXd::Zero(blk.matrix_dim(), blk.matrix_dim());
            for (int c = 0; c < blk.param; ++c)
                m.block<2, 2>(2 * c, 2 * c) =
                    rot2(rng.uniform(0.0, 2.0 * kPi));
            blocks.emplace_back(std::move(m));
        }
    }
    return GroupElement(spec, std::move(blocks));
}

GroupElement perturb(const GroupElement& g, double radius, Rng& rng) {
    AlgebraElement x = algebra_zero(g.spec_ptr());
    for (int i = 0; i < x.coords.size(); ++i) x.coords[i] = rng.gaussian();
    double n = x.coords.norm();
    if (n > 0) x.coords *= radius / n;
    return multiply(g, exp_map(x));
}

// ---------------------------------------------------------------------------
// Regularity / torsion
// ---------------------------------------------------------------------------

bool is_regular(const GroupElement& g, const Thresholds& tau) {
    AdjointMatrix ad = adjoint(g);
    for (int f = 0; f < g.spec().num_factors(); ++f) {
        Eigen::MatrixXd a = ad.factor(f);
        a -= Eigen::MatrixXd::Identity(a.rows(), a.cols());
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
        int fixed = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()[i] <= tau.tau_rank) ++fixed;
        if (fixed != g.spec().blocks()[g.spec().factor_block(f)].rank())
            return false;
    }
    return true;
}

TorsionResult torsion_order(const GroupElement& g, int qmax,
                            const Thresholds& tau) {
    if (qmax < 1) throw InputError("torsion_order: qmax must be >= 1");
    for (int q = 1; q <= qmax; ++q) {
        if (distance_to_identity(power(g, q)) <= tau.tau_torsion)
            return {true, q, qmax};
    }
    return {false, 0, qmax};
}

// ---------------------------------------------------------------------------
// Maximal torus machinery
// ---------------------------------------------------------------------------

TorusFrame maximal_torus(const GroupElement& g, const Thresholds& tau) {
    if (!is_regular(g, tau))
        throw InputError("maximal_torus: element is not regular");
    TorusFrame tf;
    tf.spec = g.spec_ptr();
    for (int b = 0; b < g.spec().num_blocks(); ++b) {
        const Block& blk = g.spec().blocks()[b];
        if (blk.kind == BlockKind::SOn) {
            PlaneForm pf = plane_form(g.real_block(b));
            tf.frames.push_back(pf.frame);
            tf.axes.emplace_back(Eigen::Vector3d::Zero());
            for (double a : pf.angles) tf.base_angles.push_back(a);
        } else if (blk.kind == BlockKind::SU2) {
            Eigen::Vector4d a = quat_of(g.su2_block(b));
            double vn = a.tail<3>().norm();
            // regularity guarantees the axis is well defined
            tf.frames.emplace_back(Eigen::MatrixXd());
            tf.axes.emplace_back(a.tail<3>() / vn);
            tf.base_angles.push_back(std::atan2(vn, a[0]));
        } else {
            tf.frames.emplace_back(
                Eigen::MatrixXd::Identity(blk.matrix_dim(), blk.matrix_dim()));
            tf.axes.emplace_back(Eigen::Vector3d::Zero());
            const auto& m = g.real_block(b);
            for (int c = 0; c < blk.param; ++c)
                tf.base_angles.push_back(
                    std::atan2(m(2 * c + 1, 2 * c), m(2 * c, 2 * c)));
        }
    }
    return tf;
}

std::vector<double> rotation_angles(const GroupElement& g,
                                    const Thresholds& tau) {
    return maximal_torus(g, tau).base_angles;
}

GroupElement TorusFrame::element(const std::vector<double>& angles) const {
    if (static_cast<int>(angles.size()) != num_angles())
        throw InputError("torus element: wrong number of angles");
    std::vector<BlockMatrix> blocks;
    int at = 0;
    for (int b = 0; b < spec->num_blocks(); ++b) {
        const Block& blk = spec->blocks()[b];
        if (blk.kind == BlockKind::SU2) {
            double th = angles[at++];
            Eigen::Vector4d q;
            q << std::cos(th), std::sin(th) * axes[b][0],
                std::sin(th) * axes[b][1], std::sin(th) * axes[b][2];
            blocks.emplace_back(su2_of_quat(q));
        } else {
            const int k = blk.matrix_dim();
            const int planes = blk.kind == BlockKind::SOn
                                   ? blk.param / 2
                                   : blk.param;
            Eigen::MatrixXd d = Eigen::MatrixXd::Identity(k, k);
            for (int j = 0; j < planes; ++j)
                d.block<2, 2>(2 * j, 2 * j) = rot2(angles[at++]);
            blocks.emplace_back(Eigen::MatrixXd(frames[b] * d * frames[b].transpose()));
        }
    }
    return GroupElement(spec, std::move(blocks));
}

std::pair<std::vector<double>, double> TorusFrame::nearest(
    const GroupElement& c) const {
    require_same_spec(*spec, c.spec(), "torus nearest");
    std::vector<double> angles;
    int at = 0;
    for (int b = 0; b < spec->num_blocks(); ++b) {
        const Block& blk = spec->blocks()[b];
        if (blk.kind == BlockKind::SU2) {
            const auto& u = c.su2_block(b);
            using namespace std::complex_literals;
            Eigen::Matrix2cd n = Eigen::Matrix2cd::Zero();
            for (int j = 0; j < 3; ++j) n += (1i * axes[b][j]) * sigma(j);
            double a = u.trace().real();
            double s = (u.adjoint() * n).trace().real();
            angles.push_back(std::atan2(s, a));
            ++at;
        } else {
            const int planes =
                blk.kind == BlockKind::SOn ? blk.param / 2 : blk.param;
            Eigen::MatrixXd m =
                frames[b].transpose() * c.real_block(b) * frames[b];
            for (int j = 0; j < planes; ++j) {
                double a = m(2 * j, 2 * j) + m(2 * j + 1, 2 * j + 1);
                double s = m(2 * j + 1, 2 * j) - m(2 * j, 2 * j + 1);
                angles.push_back(std::atan2(s, a));
                ++at;
            }
        }
    }
    GroupElement t = element(angles);
    return {angles, distance(c, t)};
}

TorusFrame TorusFrame::conjugated(const GroupElement& v) const {
    require_same_spec(*spec, v.spec(), "torus conjugated");
    TorusFrame out = *this;
    AdjointMatrix ad;  // lazily computed for su2 axes
    bool have_ad = false;
    for (int b = 0; b < spec->num_blocks(); ++b) {
        const Block& blk = spec->blocks()[b];
        if (blk.kind == BlockKind::SU2) {
            if (!have_ad) {
                ad = adjoint(v);
                have_ad = true;
            }
            const int off = spec->algebra_offset(b);
            out.axes[b] = ad.mat.block<3, 3>(off, off) * axes[b];
        } else {
            out.frames[b] = v.real_block(b) * frames[b];
        }
    }
    return out;
}

TorsionProjection torsion_project(const GroupElement& g, int qmax,
                                  const Thresholds& tau) {
    if (qmax < 1) throw InputError("torsion_project: qmax must be >= 1");
    TorusFrame tf = maximal_torus(g, tau);
    std::vector<double> snapped;
    TorsionProjection out;
    long long order = 1;
    for (double th : tf.base_angles) {
        Rational r = best_rational(th / (2.0 * kPi), qmax);
        snapped.push_back(2.0 * kPi * static_cast<double>(r.p) /
                          static_cast<double>(r.q));
        out.numerators.push_back(static_cast<int>(r.p));
        out.denominators.push_back(static_cast<int>(r.q));
        order = lcm_ll(order, r.q);
    }
    out.value = tf.element(snapped);
    out.order = order;
    return out;
}

GroupElement project_to_factor(const GroupElement& g, int factor) {
    if (factor < 0 || factor >= g.spec().num_factors())
        throw InputError("project_to_factor: factor index out of range");
    const int b = g.spec().factor_block(factor);
    SpecPtr sub = GroupSpec::make({g.spec().blocks()[b]});
    return GroupElement(sub, {g.block(b)});
}

std::vector<double> torus_block_angles(const GroupElement& g) {
    std::vector<double> out;
    for (int b = 0; b < g.spec().num_blocks(); ++b) {
        const Block& blk = g.spec().blocks()[b];
        if (!blk.is_torus()) continue;
        const auto& m = g.real_block(b);
        for (int c = 0; c < blk.param; ++c)
            out.push_back(std::atan2(m(2 * c + 1, 2 * c), m(2 * c, 2 * c)));
    }
    return out;
}

}  // namespace liedeform
