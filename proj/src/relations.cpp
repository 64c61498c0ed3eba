#include "liedeform/relations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "liedeform/errors.hpp"

namespace liedeform {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

Rational best_rational(double x, long qmax) {
    if (qmax < 1) throw InputError("best_rational: qmax must be >= 1");
    // Convergents p/q of the continued fraction of x, stopping at the last
    // one with q <= qmax; the global minimizer of |x - p/q| over q <= qmax
    // is that convergent or the longest admissible semiconvergent built
    // from it and its predecessor.
    long p_prev = 1, q_prev = 0;  // c_{-1}
    long p_cur, q_cur;            // c_0 = floor(x)
    double frac = x - std::floor(x);
    p_cur = static_cast<long>(std::floor(x));
    q_cur = 1;
    while (frac > 1e-15 && q_cur <= qmax) {
        double inv = 1.0 / frac;
        long a = static_cast<long>(std::floor(inv));
        if (a <= 0 || a > (1L << 40)) break;  // numeric noise guard
        long p_next = a * p_cur + p_prev;
        long q_next = a * q_cur + q_prev;
        if (q_next > qmax) break;
        p_prev = p_cur;
        q_prev = q_cur;
        p_cur = p_next;
        q_cur = q_next;
        frac = inv - static_cast<double>(a);
    }
    Rational best{p_cur, q_cur};
    double best_err = std::abs(x - static_cast<double>(best.p) / best.q);
    if (q_cur > 0) {
        long t = (qmax - q_prev) / q_cur;
        if (t >= 1) {
            long ps = p_prev + t * p_cur;
            long qs = q_prev + t * q_cur;
            if (qs >= 1 && qs <= qmax) {
                double err = std::abs(x - static_cast<double>(ps) / qs);
                if (err < best_err) {
                    best = {ps, qs};
                    best_err = err;
                }
            }
        }
    }
    return best;
}

namespace {

// LLL reduction in long double, sufficient for our small dimensions.
void lll_reduce(std::vector<std::vector<long double>>& b) {
    const size_t n = b.size();
    const size_t d = b[0].size();
    auto dot = [&](const std::vector<long double>& u,
                   const std::vector<long double>& v) {
        long double s = 0;
        for (size_t i = 0; i < d; ++i) s += u[i] * v[i];
        return s;
    };
    std::vector<std::vector<long double>> bstar(n,
                                                std::vector<long double>(d));
    std::vector<std::vector<long double>> mu(n, std::vector<long double>(n));
    std::vector<long double> norm2(n);
    auto gram = [&]() {
        for (size_t i = 0; i < n; ++i) {
            bstar[i] = b[i];
            for (size_t j = 0; j < i; ++j) {
                mu[i][j] = norm2[j] > 0 ? dot(b[i], bstar[j]) / norm2[j] : 0;
                for (size_t k = 0; k < d; ++k)
                    bstar[i][k] -= mu[i][j] * bstar[j][k];
            }
            norm2[i] = dot(bstar[i], bstar[i]);
        }
    };
    gram();
    size_t k = 1;
    int guard = 0;
    while (k < n && ++guard < 10000) {
        for (size_t j = k; j-- > 0;) {
            long double r = std::roundl(mu[k][j]);
            if (r != 0) {
                for (size_t i = 0; i < d; ++i) b[k][i] -= r * b[j][i];
                gram();
            }
        }
        if (norm2[k] >= (0.75L - mu[k][k - 1] * mu[k][k - 1]) * norm2[k - 1]) {
            ++k;
        } else {
            std::swap(b[k], b[k - 1]);
            gram();
            k = k > 1 ? k - 1 : 1;
        }
    }
}

}  // namespace

RelationScan find_integer_relation(const std::vector<double>& angles,
                                   long bound, double tol) {
    RelationScan scan;
    scan.bound = bound;
    scan.tol = tol;
    const int m = static_cast<int>(angles.size());
    if (m == 0) {
        scan.method = "enumeration";
        scan.min_residual = std::numeric_limits<double>::infinity();
        return scan;
    }
    double box = std::pow(2.0 * bound + 1.0, m);
    if (box <= 2e7) {
        scan.method = "enumeration";
        scan.min_residual = std::numeric_limits<double>::infinity();
        std::vector<long> c(m, -bound);
        bool done = false;
        while (!done) {
            bool all_zero = true;
            for (long ci : c)
                if (ci != 0) all_zero = false;
            if (!all_zero) {
                double s = 0;
                for (int i = 0; i < m; ++i) s += c[i] * angles[i];
                long k = std::lround(s / kTwoPi);
                double res = std::abs(s - kTwoPi * k);
                if (std::abs(k) <= bound && res < scan.min_residual) {
                    scan.min_residual = res;
                    scan.argmin = c;
                }
                if (std::abs(k) <= bound && res <= tol &&
                    !scan.relation_found) {
                    scan.relation_found = true;
                    scan.hit = {c, -k, res};
                }
            }
            int i = 0;
            while (i < m && ++c[i] > bound) c[i++] = -bound;
            done = i == m;
        }
        return scan;
    }

    // Large boxes: LLL screen on the standard relation lattice.  Any short
    // reduced vector is verified exactly before being reported; absence of
    // a short vector is strong evidence, recorded as method "lll".
    scan.method = "lll";
    scan.min_residual = std::numeric_limits<double>::infinity();
    const long double N = static_cast<long double>(bound) / (tol / kTwoPi);
    std::vector<std::vector<long double>> basis;
    for (int i = 0; i < m; ++i) {
        std::vector<long double> row(m + 1, 0.0L);
        row[i] = 1.0L;
        row[m] = N * static_cast<long double>(angles[i] / kTwoPi);
        basis.push_back(std::move(row));
    }
    std::vector<long double> last(m + 1, 0.0L);
    last[m] = N;
    basis.push_back(std::move(last));
    lll_reduce(basis);
    for (const auto& row : basis) {
        std::vector<long> c(m);
        bool zero = true, in_bound = true;
        for (int i = 0; i < m; ++i) {
            c[i] = static_cast<long>(std::llroundl(row[i]));
            if (c[i] != 0) zero = false;
            if (std::labs(c[i]) > bound) in_bound = false;
        }
        if (zero || !in_bound) continue;
        double s = 0;
        for (int i = 0; i < m; ++i) s += c[i] * angles[i];
        long k = std::lround(s / kTwoPi);
        double res = std::abs(s - kTwoPi * k);
        if (std::abs(k) > bound) continue;
        if (res < scan.min_residual) {
            scan.min_residual = res;
            scan.argmin = c;
        }
        if (res <= tol) {
            scan.relation_found = true;
            scan.hit = {c, -k, res};
            break;
        }
    }
    return scan;
}

PairRelationScan find_pair_relation(const std::vector<double>& theta,
                                    const std::vector<double>& alpha,
                                    long bound, double tol) {
    if (theta.size() != alpha.size())
        throw InputError("pair relation: angle vectors differ in length");
    PairRelationScan scan;
    scan.bound = bound;
    scan.tol = tol;
    scan.min_residual = std::numeric_limits<double>::infinity();
    const int r = static_cast<int>(theta.size());
    // (m,n) and (-m,-n) give the same residual; scan one half-plane.
    for (long n = 0; n <= bound; ++n) {
        for (long m = (n == 0 ? 1 : -bound); m <= bound; ++m) {
            ++scan.pairs_checked;
            double worst = 0;
            for (int j = 0; j < r; ++j) {
                double v = m * theta[j] + n * alpha[j];
                double res = std::abs(v - kTwoPi * std::lround(v / kTwoPi));
                worst = std::max(worst, res);
            }
            if (worst < scan.min_residual) {
                scan.min_residual = worst;
                scan.argmin_m = m;
                scan.argmin_n = n;
            }
            if (worst <= tol && !scan.relation_found) {
                scan.relation_found = true;
                scan.m = m;
                scan.n = n;
            }
        }
    }
    return scan;
}

}  // namespace liedeform
