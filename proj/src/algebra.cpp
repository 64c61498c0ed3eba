#include "liedeform/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "liedeform/errors.hpp"
#include "liedeform/relations.hpp"

namespace liedeform {

namespace {

// One element of the direct sum of End(g_i): a square matrix per non-torus block.
using EndoElem = std::vector<Eigen::MatrixXd>;

std::vector<int> nontorus_blocks(const GroupSpec& spec) {
    std::vector<int> idx;
    for (int b = 0; b < spec.num_blocks(); ++b)
        if (spec.block(b).kind != BlockKind::Torus) idx.push_back(b);
    return idx;
}

Eigen::VectorXd vectorize(const EndoElem& e, int ambient) {
    Eigen::VectorXd v(ambient);
    int at = 0;
    for (const Eigen::MatrixXd& m : e) {
        for (int r = 0; r < m.rows(); ++r)
            for (int c = 0; c < m.cols(); ++c) v[at++] = m(r, c);
    }
    return v;
}

EndoElem product(const EndoElem& a, const EndoElem& b) {
    EndoElem out;
    out.reserve(a.size());
    for (size_t i = 0; i < a.size(); ++i) out.push_back(a[i] * b[i]);
    return out;
}

}  // namespace

int endo_dim(const GroupSpec& spec) {
    int d = 0;
    for (int b = 0; b < spec.num_blocks(); ++b)
        if (spec.block(b).kind != BlockKind::Torus) {
            int a = spec.block(b).algebra_dim();
            d += a * a;
        }
    return d;
}

SpanBasis span_closure(const std::vector<AdjointMatrix>& gens,
                       const Thresholds& thr) {
    if (gens.empty()) throw InputError("span closure: empty generator list");
    const GroupSpec& spec = *gens[0].spec;
    std::vector<int> blocks = nontorus_blocks(spec);
    if (blocks.empty())
        throw InputError("span closure: spec has only torus blocks");
    const int ambient = endo_dim(spec);

    // Generators restricted to non-torus coordinates, plus the identity.
    std::vector<EndoElem> seeds;
    {
        EndoElem id;
        for (int b : blocks)
            id.push_back(Eigen::MatrixXd::Identity(spec.block(b).algebra_dim(),
                                                   spec.block(b).algebra_dim()));
        seeds.push_back(std::move(id));
    }
    for (const AdjointMatrix& g : gens) {
        require_same_spec(*g.spec, spec, "span closure");
        EndoElem e;
        for (size_t f = 0; f < blocks.size(); ++f)
            e.push_back(g.factor(static_cast<int>(f)));
        seeds.push_back(std::move(e));
    }

    std::vector<EndoElem> basis;
    Eigen::MatrixXd coords(ambient, 0);

    // Modified Gram-Schmidt with a second orthogonalization pass.
    auto try_add = [&](EndoElem e) -> bool {
        Eigen::VectorXd v = vectorize(e, ambient);
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i < coords.cols(); ++i)
                v -= coords.col(i).dot(v) * coords.col(i);
        double norm = v.norm();
        if (norm <= thr.tau_rank) return false;
        v /= norm;
        coords.conservativeResize(Eigen::NoChange, coords.cols() + 1);
        coords.col(coords.cols() - 1) = v;
        // Store the orthonormalized element so that products stay bounded.
        EndoElem unit;
        int at = 0;
        for (int b : blocks) {
            int d = spec.block(b).algebra_dim();
            Eigen::MatrixXd m(d, d);
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) m(r, c) = v[at++];
            unit.push_back(std::move(m));
        }
        basis.push_back(std::move(unit));
        return true;
    };

    for (const EndoElem& s : seeds) try_add(s);

    // Multiply every basis element by every generator on both sides; the
    // index loop also visits elements added along the way, so the span is
    // stable under the generators when the loop finishes.
    const std::vector<EndoElem> mult(seeds.begin() + 1, seeds.end());
    for (size_t i = 0; i < basis.size(); ++i) {
        if (static_cast<int>(basis.size()) == ambient) break;
        EndoElem current = basis[i];
        for (const EndoElem& g : mult) {
            try_add(product(g, current));
            try_add(product(current, g));
            if (static_cast<int>(basis.size()) == ambient) break;
        }
        if (basis.size() > static_cast<size_t>(ambient))
            throw Error("span closure exceeded the ambient dimension");
    }

    SpanBasis out;
    out.spec = &spec;
    out.basis = coords;
    out.dim = static_cast<int>(coords.cols());
    out.ambient_dim = ambient;
    return out;
}

bool omega_test(const GroupElement& g, const std::vector<GroupElement>& others,
                const Thresholds& thr) {
    std::vector<AdjointMatrix> ads;
    ads.push_back(adjoint(g));
    for (const GroupElement& h : others) ads.push_back(adjoint(h));
    return span_closure(ads, thr).full();
}

bool omega_tilde_test(const std::vector<GroupElement>& gens,
                      const Thresholds& thr) {
    if (gens.size() < 2)
        throw InputError("omega-tilde test needs at least two elements");
    std::vector<AdjointMatrix> ads;
    for (const GroupElement& g : gens) ads.push_back(adjoint(g));
    for (size_t skip = 0; skip < ads.size(); ++skip) {
        std::vector<AdjointMatrix> sub;
        for (size_t i = 0; i < ads.size(); ++i)
            if (i != skip) sub.push_back(ads[i]);
        if (!span_closure(sub, thr).full()) return false;
    }
    return true;
}

bool DensityCertificate::all_true() const {
    if (!algebra_full || !abelian_dense) return false;
    for (bool f : per_factor_nontorsion)
        if (!f) return false;
    return true;
}

DensityCertificate dense_tuple_certificate(const std::vector<GroupElement>& gens,
                                           long qmax, const Thresholds& thr,
                                           const Budgets& budgets) {
    if (gens.empty()) throw InputError("density certificate: empty tuple");
    const GroupSpec& spec = gens[0].spec();
    DensityCertificate cert;
    cert.tuple = gens;
    cert.qmax = qmax;
    cert.cert_word_len = budgets.cert_word_len;

    const int p = spec.num_factors();
    if (p == 0) {
        cert.algebra_full = true;  // no endomorphism algebra to generate
    } else {
        std::vector<AdjointMatrix> ads;
        for (const GroupElement& g : gens) ads.push_back(adjoint(g));
        cert.algebra_full = span_closure(ads, thr).full();
    }

    cert.per_factor_nontorsion.assign(p, false);
    cert.nontorsion_witnesses.assign(p, Word(static_cast<int>(gens.size())));
    if (p > 0) {
        int found = 0;
        for_each_word_value(
            gens, 1, budgets.cert_word_len,
            [&](const Word& w, const GroupElement& v) {
                for (int i = 0; i < p; ++i) {
                    if (cert.per_factor_nontorsion[i]) continue;
                    TorsionResult t = torsion_order(project_to_factor(v, i),
                                                    static_cast<int>(qmax), thr);
                    if (!t.is_torsion) {
                        cert.per_factor_nontorsion[i] = true;
                        cert.nontorsion_witnesses[i] = w;
                        ++found;
                    }
                }
                return found < p;
            });
    }

    bool has_torus = false;
    for (int b = 0; b < spec.num_blocks(); ++b)
        if (spec.block(b).kind == BlockKind::Torus) has_torus = true;
    if (!has_torus) {
        cert.abelian_dense = true;
    } else {
        cert.abelian_dense = false;
        for (const GroupElement& g : gens) {
            std::vector<double> angles = torus_block_angles(g);
            RelationScan scan = find_integer_relation(angles, qmax, thr.tau_rel);
            if (!scan.relation_found) {
                cert.abelian_dense = true;
                break;
            }
        }
    }
    return cert;
}

}  // namespace liedeform
