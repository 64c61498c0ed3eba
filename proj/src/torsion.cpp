#include "liedeform/torsion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "liedeform/errors.hpp"

namespace liedeform {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

Eigen::MatrixXd null_space(const Eigen::MatrixXd& m, double tau) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        m, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > tau) ++rank;
    return svd.matrixV().rightCols(m.cols() - rank);
}

}  // namespace

std::vector<AlgebraElement> kernel_space(const GroupElement& g,
                                         const Thresholds& thr) {
    const int d = g.spec().algebra_dim();
    Eigen::MatrixXd k =
        adjoint(g).mat - Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd basis = null_space(k, thr.tau_rank);
    std::vector<AlgebraElement> out;
    out.reserve(basis.cols());
    for (int c = 0; c < basis.cols(); ++c)
        out.push_back(AlgebraElement{g.spec_ptr(), basis.col(c)});
    return out;
}

bool claim_check(const GroupElement& a, const GroupElement& b,
                 const Thresholds& thr) {
    require_same_spec(a.spec(), b.spec(), "claim_check");
    if (!is_regular(a, thr) || !is_regular(b, thr))
        throw InputError("claim_check: both elements must be regular");
    auto ka = kernel_space(a, thr);
    auto kb = kernel_space(b, thr);
    const int d = a.spec().algebra_dim();
    Eigen::MatrixXd joint(d, ka.size() + kb.size());
    int c = 0;
    for (const auto& v : ka) joint.col(c++) = v.coords;
    for (const auto& v : kb) joint.col(c++) = v.coords;
    if (joint.cols() == 0) return true;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(joint);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > thr.tau_rank) ++rank;
    return rank == joint.cols();
}

ProductDifferential product_differential(const GroupElement& a,
                                         const GroupElement& b,
                                         const Thresholds& thr) {
    require_same_spec(a.spec(), b.spec(), "product_differential");
    const int d = a.spec().algebra_dim();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd ainv = adjoint(inverse(a)).mat;
    Eigen::MatrixXd binv = adjoint(inverse(b)).mat;
    ProductDifferential pd{a, b, Eigen::MatrixXd(d, 2 * d),
                           Eigen::VectorXd(), 0};
    pd.matrix.leftCols(d) = binv * (ainv - id);
    pd.matrix.rightCols(d) = binv - id;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(pd.matrix);
    pd.singular_values = svd.singularValues();
    Eigen::MatrixXd eq(d, 2 * d);
    eq.leftCols(d) = ainv - id;
    eq.rightCols(d) = binv - id;
    Eigen::JacobiSVD<Eigen::MatrixXd> eqsvd(eq);
    for (int i = 0; i < eqsvd.singularValues().size(); ++i)
        if (eqsvd.singularValues()[i] > thr.tau_rank) ++pd.eq_rank;
    return pd;
}

bool is_product_map_open(const GroupElement& a, const GroupElement& b,
                         const Thresholds& thr) {
    return product_differential(a, b, thr).sigma_min() > thr.tau_rank;
}

double torsion_projection_bound(const GroupSpec& spec, long qmax) {
    if (qmax < 1) throw InputError("projection bound: qmax must be >= 1");
    int planes = 0;
    for (const Block& b : spec.blocks())
        if (!b.is_torus()) planes += b.rank();
    return std::sqrt(2.0) * 3.14159265358979323846 * std::sqrt(double(planes)) /
           static_cast<double>(qmax);
}

namespace {

// Torsion order of a regular element from the rational reconstruction of
// its rotation angles; InputError when some angle is not (numerically) a
// rational multiple of 2*pi with denominator <= qmax.
long long rational_order(const GroupElement& g, long qmax,
                         const Thresholds& thr) {
    auto angles = rotation_angles(g, thr);
    long long order = 1;
    for (double th : angles) {
        Rational r = best_rational(th / kTwoPi, qmax);
        if (std::abs(th / kTwoPi - double(r.p) / r.q) > 1e-7)
            throw InputError("torsion product: element is not torsion");
        order = std::lcm(order, static_cast<long long>(r.q));
    }
    if (distance_to_identity(power(g, order)) > 1e-6)
        throw InputError("torsion product: reconstructed order fails");
    return order;
}

}  // namespace

FAWitness solve_torsion_product(const GroupElement& a, const GroupElement& b,
                                long qmax, double delta,
                                const Thresholds& thr, const Budgets& budgets) {
    require_same_spec(a.spec(), b.spec(), "torsion product");
    if (!is_regular(a, thr) || !is_regular(b, thr))
        throw InputError("torsion product: inputs must be regular");
    if (!claim_check(a, b, thr))
        throw InputError(
            "torsion product: fixed spaces of the adjoints intersect");
    const SpecPtr spec = a.spec_ptr();
    const int d = spec->algebra_dim();

    FAWitness w{a,
                b,
                rational_order(a, qmax, thr),
                rational_order(b, qmax, thr),
                0,
                GroupElement::identity(spec),
                GroupElement::identity(spec),
                0,
                0,
                0,
                0,
                {},
                {}};

    TorsionProjection proj = torsion_project(multiply(a, b), qmax, thr);
    const GroupElement& cstar = proj.value;
    w.order_ab = proj.order;

    GroupElement cur_a = a, cur_b = b;
    double res = distance(multiply(cur_a, cur_b), cstar);
    w.residual_history.push_back(res);
    const int max_iter = 100;
    int it = 0;
    while (res > thr.tau_newton) {
        if (++it > max_iter) throw NoConvergence(it - 1, res);
        ProductDifferential pd = product_differential(cur_a, cur_b, thr);
        GroupElement prod = multiply(cur_a, cur_b);
        AlgebraElement err = log_map(multiply(inverse(prod), cstar), thr);
        // Min-norm Gauss-Newton step.
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(
            pd.matrix, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Eigen::VectorXd z = Eigen::VectorXd::Zero(2 * d);
        for (int i = 0; i < svd.singularValues().size(); ++i) {
            double s = svd.singularValues()[i];
            if (s <= thr.tau_rank) continue;
            z += svd.matrixV().col(i) *
                 (svd.matrixU().col(i).dot(err.coords) / s);
        }
        bool accepted = false;
        double scale = 1.0;
        for (int h = 0; h < 30; ++h, scale *= 0.5) {
            GroupElement ha = exp_map({spec, scale * z.head(d)});
            GroupElement hb = exp_map({spec, scale * z.tail(d)});
            GroupElement na = multiply(multiply(ha, cur_a), inverse(ha));
            GroupElement nb = multiply(multiply(hb, cur_b), inverse(hb));
            double nres = distance(multiply(na, nb), cstar);
            if (nres < res) {
                cur_a = na;
                cur_b = nb;
                w.conj_a = multiply(ha, w.conj_a);
                w.conj_b = multiply(hb, w.conj_b);
                res = nres;
                accepted = true;
                break;
            }
        }
        if (!accepted) throw NoConvergence(it, res);
        w.residual_history.push_back(res);
    }
    w.a_prime = cur_a;
    w.b_prime = cur_b;
    w.residual = res;
    w.iterations = it;
    w.deform_a = distance(cur_a, a);
    w.deform_b = distance(cur_b, b);
    if (w.deform_a > delta || w.deform_b > delta)
        throw TargetTooFar(
            "torsion product: conjugation moved an element beyond delta");
    (void)budgets;
    return w;
}

FAWitness fa_witness(const GroupElement& a, const GroupElement& b, double eps,
                     long qmax, Rng& rng, const Thresholds& thr,
                     const Budgets& budgets) {
    require_same_spec(a.spec(), b.spec(), "fa_witness");
    const SpecPtr spec = a.spec_ptr();
    if (spec->has_torus())
        throw InputError("fa_witness: spec must be semisimple");
    if (eps <= 0) throw InputError("fa_witness: eps must be positive");
    const double stage = eps / 3;
    const double bound = torsion_projection_bound(*spec, qmax);
    if (bound > stage) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "fa_witness: qmax projection bound %.6g exceeds eps/3 = "
                      "%.6g; raise qmax",
                      bound, stage);
        throw QmaxTooSmall(msg);
    }

    // Already a witness?  Keep it untouched.
    {
        TorsionResult ta = torsion_order(a, static_cast<int>(qmax), thr);
        TorsionResult tb = torsion_order(b, static_cast<int>(qmax), thr);
        TorsionResult tab =
            torsion_order(multiply(a, b), static_cast<int>(qmax), thr);
        if (ta.is_torsion && tb.is_torsion && tab.is_torsion &&
            is_regular(a, thr) && is_regular(b, thr)) {
            FAWitness w{a,
                        b,
                        ta.order,
                        tb.order,
                        tab.order,
                        GroupElement::identity(spec),
                        GroupElement::identity(spec),
                        0,
                        0,
                        0,
                        0,
                        {},
                        {}};
            return w;
        }
    }

    for (int attempt = 0; attempt <= budgets.retries; ++attempt) {
        GroupElement a0 = perturb(a, 0.8 * stage, rng);
        GroupElement b0 = perturb(b, 0.8 * stage, rng);
        if (!is_regular(a0, thr) || !is_regular(b0, thr)) continue;
        if (!claim_check(a0, b0, thr)) continue;
        DensityCertificate cert =
            dense_tuple_certificate({a0, b0}, qmax, thr, budgets);
        if (!cert.all_true()) continue;

        TorsionProjection pa = torsion_project(a0, static_cast<int>(qmax), thr);
        TorsionProjection pb = torsion_project(b0, static_cast<int>(qmax), thr);
        const GroupElement& a1 = pa.value;
        const GroupElement& b1 = pb.value;
        if (distance(a1, a0) > stage || distance(b1, b0) > stage) continue;
        if (!is_regular(a1, thr) || !is_regular(b1, thr)) continue;
        if (!claim_check(a1, b1, thr)) continue;

        FAWitness w;
        try {
            w = solve_torsion_product(a1, b1, qmax, stage, thr, budgets);
        } catch (const NoConvergence&) {
            continue;
        } catch (const TargetTooFar&) {
            continue;
        }
        w.order_a = pa.order;
        w.order_b = pb.order;
        w.deform_a = distance(w.a_prime, a);
        w.deform_b = distance(w.b_prime, b);
        if (w.deform_a >= eps || w.deform_b >= eps) continue;
        w.certificate = cert;
        return w;
    }
    throw CertificationFailed(
        "fa_witness: no certified witness within the retry budget");
}

Z2Result z2_example(const GroupElement& a, const GroupElement& b,
                    const GroupElement& c, double eps, int max_len,
                    long relation_bound, long qmax, Rng& rng,
                    const Thresholds& thr, const Budgets& budgets) {
    require_same_spec(a.spec(), b.spec(), "z2_example");
    require_same_spec(a.spec(), c.spec(), "z2_example");
    const SpecPtr spec = a.spec_ptr();
    if (spec->has_torus())
        throw InputError("z2_example: spec must be semisimple");
    if (eps <= 0) throw InputError("z2_example: eps must be positive");
    if (max_len < 0 || relation_bound < 1)
        throw InputError("z2_example: bad search bounds");

    // Regular non-torsion deformation of a.
    GroupElement a1 = a;
    bool ok_a = false;
    for (int i = 0; i <= budgets.retries && !ok_a; ++i) {
        if (is_regular(a1, thr) &&
            !torsion_order(a1, static_cast<int>(qmax), thr).is_torsion &&
            distance(a1, a) < eps) {
            ok_a = true;
            break;
        }
        a1 = perturb(a, 0.5 * eps, rng);
    }
    if (!ok_a)
        throw CertificationFailed("z2_example: no regular non-torsion a'");

    // b deformation certifying density of the pair.
    GroupElement b1 = b;
    DensityCertificate cert;
    bool ok_b = false;
    for (int i = 0; i <= budgets.retries && !ok_b; ++i) {
        if (distance(b1, b) < eps) {
            cert = dense_tuple_certificate({a1, b1}, qmax, thr, budgets);
            if (cert.all_true()) {
                ok_b = true;
                break;
            }
        }
        b1 = perturb(b, 0.5 * eps, rng);
    }
    if (!ok_b)
        throw CertificationFailed("z2_example: no dense-certified pair");

    const TorusFrame base = maximal_torus(a1, thr);
    const std::vector<double>& alpha = base.base_angles;
    const std::vector<GroupElement> pair = {a1, b1};
    const int planes = base.num_angles();

    Z2Result out;
    out.a_prime = a1;
    out.b_prime = b1;
    out.certificate = cert;
    double best_dist = std::numeric_limits<double>::infinity();
    bool done = false;

    for_each_word_value(
        pair, 0, max_len, [&](const Word& w, const GroupElement& v) {
            TorusFrame conj = base.conjugated(v);
            auto [angles, dist] = conj.nearest(c);
            best_dist = std::min(best_dist, dist);
            if (dist >= eps) return true;

            auto try_angles = [&](const std::vector<double>& th)
                -> bool {
                GroupElement cp = conj.element(th);
                double dc = distance(c, cp);
                if (dc >= eps) return false;
                PairRelationScan scan = find_pair_relation(
                    th, alpha, relation_bound, thr.tau_rel);
                if (scan.relation_found) return false;
                out.gamma = w;
                out.conjugated_a = multiply(multiply(v, a1), inverse(v));
                out.c_prime = cp;
                out.dist_c = dc;
                out.relation_report = scan;
                return true;
            };

            if (try_angles(angles)) {
                done = true;
                return false;
            }
            // The nearest torus point hit a bounded relation; nudge the
            // angles inside the remaining distance budget.
            double room = (eps - dist) * 0.6 / std::sqrt(double(planes));
            for (int t = 0; t < budgets.retries; ++t) {
                std::vector<double> th = angles;
                for (double& x : th) x += rng.uniform(-room, room);
                if (try_angles(th)) {
                    done = true;
                    return false;
                }
            }
            return true;
        });

    if (!done)
        throw BudgetExhausted("z2 conjugate torus search", best_dist);
    return out;
}

}  // namespace liedeform
