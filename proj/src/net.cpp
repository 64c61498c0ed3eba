#include "liedeform/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "liedeform/errors.hpp"

namespace liedeform {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Compact exact-distance coordinates per block: a unit quaternion for SO(3)
// (canonical hemisphere) and SU(2) (signed), raw angles for torus circles,
// and raw matrix entries for larger orthogonal blocks.  Frobenius distances
// are recovered exactly from these charts, and a few chart coordinates give
// 1-Lipschitz grid keys.
enum class ChartKind { QuatFolded, QuatSigned, Angles, Raw };

struct ChartBlock {
    ChartKind kind;
    int block = 0;   // spec block index
    int offset = 0;  // float offset into the chart
    int count = 0;   // floats in this chart block
};

struct ChartLayout {
    std::vector<ChartBlock> blocks;
    int stride = 0;

    static ChartLayout make(const GroupSpec& spec) {
        ChartLayout lay;
        for (int b = 0; b < spec.num_blocks(); ++b) {
            const Block& blk = spec.blocks()[b];
            ChartBlock cb;
            cb.block = b;
            cb.offset = lay.stride;
            if (blk.kind == BlockKind::SU2) {
                cb.kind = ChartKind::QuatSigned;
                cb.count = 4;
            } else if (blk.kind == BlockKind::Torus) {
                cb.kind = ChartKind::Angles;
                cb.count = blk.param;
            } else if (blk.param == 3) {
                cb.kind = ChartKind::QuatFolded;
                cb.count = 4;
            } else {
                cb.kind = ChartKind::Raw;
                cb.count = blk.param * blk.param;
            }
            lay.stride += cb.count;
            lay.blocks.push_back(cb);
        }
        return lay;
    }
};

void quat_of_so3(const Eigen::MatrixXd& m, float* q) {
    double w, x, y, z;
    double tr = m(0, 0) + m(1, 1) + m(2, 2);
    if (tr > 0) {
        double s = std::sqrt(tr + 1.0) * 2;
        w = 0.25 * s;
        x = (m(2, 1) - m(1, 2)) / s;
        y = (m(0, 2) - m(2, 0)) / s;
        z = (m(1, 0) - m(0, 1)) / s;
    } else if (m(0, 0) >= m(1, 1) && m(0, 0) >= m(2, 2)) {
        double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2;
        w = (m(2, 1) - m(1, 2)) / s;
        x = 0.25 * s;
        y = (m(0, 1) + m(1, 0)) / s;
        z = (m(0, 2) + m(2, 0)) / s;
    } else if (m(1, 1) >= m(2, 2)) {
        double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2;
        w = (m(0, 2) - m(2, 0)) / s;
        x = (m(0, 1) + m(1, 0)) / s;
        y = 0.25 * s;
        z = (m(1, 2) + m(2, 1)) / s;
    } else {
        double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2;
        w = (m(1, 0) - m(0, 1)) / s;
        x = (m(0, 2) + m(2, 0)) / s;
        y = (m(1, 2) + m(2, 1)) / s;
        z = 0.25 * s;
    }
    double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (w < 0) n = -n;  // canonical hemisphere
    q[0] = static_cast<float>(w / n);
    q[1] = static_cast<float>(x / n);
    q[2] = static_cast<float>(y / n);
    q[3] = static_cast<float>(z / n);
}

void quat_of_su2(const Eigen::Matrix2cd& u, float* q) {
    double a0 = 0.5 * (u(0, 0).real() + u(1, 1).real());
    double a1 = 0.5 * (u(0, 1).imag() + u(1, 0).imag());
    double a2 = 0.5 * (u(0, 1).real() - u(1, 0).real());
    double a3 = 0.5 * (u(0, 0).imag() - u(1, 1).imag());
    double n = std::sqrt(a0 * a0 + a1 * a1 + a2 * a2 + a3 * a3);
    q[0] = static_cast<float>(a0 / n);
    q[1] = static_cast<float>(a1 / n);
    q[2] = static_cast<float>(a2 / n);
    q[3] = static_cast<float>(a3 / n);
}

void extract_chart(const ChartLayout& lay, const GroupElement& g, float* out) {
    for (const ChartBlock& cb : lay.blocks) {
        float* dst = out + cb.offset;
        switch (cb.kind) {
            case ChartKind::QuatFolded:
                quat_of_so3(g.real_block(cb.block), dst);
                break;
            case ChartKind::QuatSigned:
                quat_of_su2(g.su2_block(cb.block), dst);
                break;
            case ChartKind::Angles: {
                const Eigen::MatrixXd& m = g.real_block(cb.block);
                for (int c = 0; c < cb.count; ++c)
                    dst[c] = static_cast<float>(
                        std::atan2(m(2 * c + 1, 2 * c), m(2 * c, 2 * c)));
                break;
            }
            case ChartKind::Raw: {
                const Eigen::MatrixXd& m = g.real_block(cb.block);
                int at = 0;
                for (int r = 0; r < m.rows(); ++r)
                    for (int c = 0; c < m.cols(); ++c)
                        dst[at++] = static_cast<float>(m(r, c));
                break;
            }
        }
    }
}

double chart_dist2(const ChartLayout& lay, const float* a, const float* b) {
    double d2 = 0;
    for (const ChartBlock& cb : lay.blocks) {
        const float* x = a + cb.offset;
        const float* y = b + cb.offset;
        switch (cb.kind) {
            case ChartKind::QuatFolded: {
                double tm = 0, tp = 0;
                for (int i = 0; i < 4; ++i) {
                    double dm = double(x[i]) - y[i], dp = double(x[i]) + y[i];
                    tm += dm * dm;
                    tp += dp * dp;
                }
                double t = std::min(tm, tp);  // chord^2 on the quaternion
                d2 += 8 * t - 2 * t * t;
                break;
            }
            case ChartKind::QuatSigned: {
                double t = 0;
                for (int i = 0; i < 4; ++i) {
                    double d = double(x[i]) - y[i];
                    t += d * d;
                }
                d2 += 2 * t;
                break;
            }
            case ChartKind::Angles:
                for (int i = 0; i < cb.count; ++i) {
                    double s = std::sin(0.5 * (double(x[i]) - y[i]));
                    d2 += 8 * s * s;
                }
                break;
            case ChartKind::Raw:
                for (int i = 0; i < cb.count; ++i) {
                    double d = double(x[i]) - y[i];
                    d2 += d * d;
                }
                break;
        }
    }
    return d2;
}

// Chord / angle reach needed in chart coordinates to capture every pair
// within Frobenius distance r.
double quat_folded_reach(double r) { return 0.5 * r; }
double quat_signed_reach(double r) { return r / std::sqrt(2.0); }
double angle_reach(double r) {
    double s = r / (2 * std::sqrt(2.0));
    if (s >= 1) return 2 * kPi;
    return 2 * std::asin(s);
}

struct KeyDim {
    int chart_offset;
    float lo;
    float cell;
    int bins;
    bool wrap;
};

// Open-addressed bucket grid over a few 1-Lipschitz chart coordinates.
// Points within `radius` of a query are guaranteed to appear among the
// candidates; extra candidates are filtered by exact chart distance.
struct Grid {
    const ChartLayout* lay = nullptr;
    double radius = 0;
    std::vector<KeyDim> dims;
    // Folded-quat blocks get mirrored inserts near the hemisphere boundary.
    std::vector<ChartBlock> folded;
    double fold_margin = 0;
    std::vector<int32_t> heads;
    std::vector<int32_t> nexts;
    std::vector<int32_t> items;

    Grid(const ChartLayout& layout, double r) : lay(&layout), radius(r) {
        const int max_dims = 5;
        for (const ChartBlock& cb : lay->blocks) {
            if (static_cast<int>(dims.size()) >= max_dims) break;
            switch (cb.kind) {
                case ChartKind::QuatFolded: {
                    folded.push_back(cb);
                    double reach = quat_folded_reach(r);
                    fold_margin = std::max(fold_margin, reach);
                    for (int i = 1; i <= 3; ++i)
                        push_dim(cb.offset + i, -1.0f, reach, 2.0, false);
                    break;
                }
                case ChartKind::QuatSigned:
                    for (int i = 1; i <= 3; ++i)
                        push_dim(cb.offset + i, -1.0f, quat_signed_reach(r),
                                 2.0, false);
                    break;
                case ChartKind::Angles:
                    for (int i = 0; i < cb.count; ++i)
                        push_dim(cb.offset + i, float(-kPi), angle_reach(r),
                                 2 * kPi, true);
                    break;
                case ChartKind::Raw:
                    for (int i = 0; i < std::min(cb.count, 3); ++i)
                        push_dim(cb.offset + i, -1.0f, r, 2.0, false);
                    break;
            }
        }
        long cells = 1;
        for (KeyDim& d : dims) cells *= d.bins;
        while (cells > (1 << 22)) {
            auto it = std::max_element(
                dims.begin(), dims.end(),
                [](const KeyDim& a, const KeyDim& b) { return a.bins < b.bins; });
            cells /= it->bins;
            it->bins = (it->bins + 1) / 2;
            it->cell = (it->wrap ? float(2 * kPi) : 2.0f) / it->bins;
            cells *= it->bins;
        }
        heads.assign(cells, -1);
    }

    void push_dim(int offset, float lo, double reach, double range, bool wrap) {
        if (static_cast<int>(dims.size()) >= 5) return;
        KeyDim d;
        d.chart_offset = offset;
        d.lo = lo;
        d.wrap = wrap;
        int bins = reach <= 0 ? 64 : static_cast<int>(std::floor(range / reach));
        d.bins = std::clamp(bins, 1, 64);
        d.cell = static_cast<float>(range / d.bins);
        dims.push_back(d);
    }

    int bin_of(const KeyDim& d, float v) const {
        int b = static_cast<int>(std::floor((v - d.lo) / d.cell));
        if (d.wrap) {
            b %= d.bins;
            if (b < 0) b += d.bins;
        } else {
            b = std::clamp(b, 0, d.bins - 1);
        }
        return b;
    }

    long cell_of(const float* chart) const {
        long cell = 0;
        for (const KeyDim& d : dims)
            cell = cell * d.bins + bin_of(d, chart[d.chart_offset]);
        return cell;
    }

    void link(long cell, int idx) {
        items.push_back(idx);
        nexts.push_back(heads[cell]);
        heads[cell] = static_cast<int32_t>(items.size()) - 1;
    }

    // Enumerates the cells the (possibly sign-mirrored) copies of this chart
    // belong to.  `fn(cell)` may be called with duplicates.
    template <typename F>
    void for_each_variant_cell(const float* chart, F&& fn) {
        int nf = static_cast<int>(folded.size());
        std::vector<float> tmp(chart, chart + lay->stride);
        int flips = 0;
        for (int i = 0; i < nf; ++i)
            if (chart[folded[i].offset] <= fold_margin) flips |= 1 << i;
        // Iterate over all subsets of the near-boundary folded blocks.
        for (int mask = flips;; mask = (mask - 1) & flips) {
            for (int i = 0; i < nf; ++i) {
                const ChartBlock& cb = folded[i];
                bool flip = (mask >> i) & 1;
                for (int c = 0; c < 4; ++c)
                    tmp[cb.offset + c] =
                        flip ? -chart[cb.offset + c] : chart[cb.offset + c];
            }
            fn(cell_of(tmp.data()));
            if (mask == 0) break;
        }
    }

    void insert(int idx, const float* chart) {
        for_each_variant_cell(chart, [&](long cell) { link(cell, idx); });
    }

    // Visits candidate point indices near the chart (duplicates possible).
    // Return false from fn to stop.
    template <typename F>
    bool query(const float* chart, F&& fn) const {
        int nd = static_cast<int>(dims.size());
        int base[5], off[5];
        for (int i = 0; i < nd; ++i) {
            base[i] = bin_of(dims[i], chart[dims[i].chart_offset]);
            off[i] = -1;
        }
        while (true) {
            long cell = 0;
            bool valid = true;
            for (int i = 0; i < nd; ++i) {
                int b = base[i] + off[i];
                const KeyDim& d = dims[i];
                if (d.wrap) {
                    if (b < 0) b += d.bins;
                    if (b >= d.bins) b -= d.bins;
                } else if (b < 0 || b >= d.bins) {
                    valid = false;
                    break;
                }
                cell = cell * d.bins + b;
            }
            if (valid) {
                for (int32_t node = heads[cell]; node >= 0; node = nexts[node])
                    if (!fn(items[node])) return false;
            }
            int i = 0;
            for (; i < nd; ++i) {
                if (off[i] < 1) {
                    ++off[i];
                    break;
                }
                off[i] = -1;
            }
            if (i == nd) break;
        }
        return true;
    }
};

struct PointSet {
    const ChartLayout* lay;
    std::vector<float> charts;
    int size = 0;

    explicit PointSet(const ChartLayout& layout) : lay(&layout) {}
    const float* chart(int i) const { return charts.data() + i * lay->stride; }
    int add(const GroupElement& g) {
        charts.resize(charts.size() + lay->stride);
        extract_chart(*lay, g, charts.data() + size * lay->stride);
        return size++;
    }
};

}  // namespace

NetTable build_net(const GroupElement& g1, const GroupElement& g2,
                   double epsilon, int confidence_samples, Rng& rng,
                   const Thresholds& thr, const Budgets& budgets) {
    require_same_spec(g1.spec(), g2.spec(), "net");
    if (epsilon <= 0) throw InputError("net: epsilon must be positive");
    if (confidence_samples < 1)
        throw InputError("net: confidence sample count must be positive");
    const SpecPtr spec = g1.spec_ptr();
    const std::vector<GroupElement> pair = {g1, g2};
    const ChartLayout layout = ChartLayout::make(*spec);

    const double r_cov = epsilon / 2;
    const double sep = epsilon / 4 + 1e-4 * epsilon;
    // Admission needs a candidate this close to an uncovered sample.  Then
    // a separation-blocked candidate proves the sample covered anyway:
    // approx + sep < r_cov.
    const double approx = epsilon / 4 - 3e-4 * epsilon;
    const double pad = 1e-3 * epsilon;

    NetTable net;
    net.epsilon = epsilon;
    net.pair_first = g1;
    net.pair_second = g2;
    net.confidence_samples = confidence_samples;

    PointSet centers(layout);
    Grid cov_grid(layout, r_cov);

    // Candidate bank: every reduced two-letter word up to the current
    // length, charted for nearest-candidate lookups.  Letters are stored
    // flat so a million candidates stay cheap.
    PointSet cand_pts(layout);
    Grid cand_grid(layout, approx);
    std::vector<int8_t> cand_letters;
    std::vector<int32_t> cand_off = {0};
    int table_len = -1;
    // Stored values are capped by memory, not correctness: longer words
    // fall through to the streaming tier below.
    const long table_value_cap =
        std::min<long>(4'000'000, 400'000'000 / (layout.stride * 4 + 16));

    auto grow_table = [&]() {
        ++table_len;
        for_each_word_value(pair, table_len, table_len,
                            [&](const Word& w, const GroupElement& v) {
                                int idx = cand_pts.add(v);
                                cand_grid.insert(idx, cand_pts.chart(idx));
                                for (int l : w.letters())
                                    cand_letters.push_back(static_cast<int8_t>(l));
                                cand_off.push_back(
                                    static_cast<int32_t>(cand_letters.size()));
                                return true;
                            });
    };
    auto cand_word = [&](int idx) {
        std::vector<int> ls(cand_letters.begin() + cand_off[idx],
                            cand_letters.begin() + cand_off[idx + 1]);
        return Word::from_letters(2, ls);
    };
    grow_table();  // length 0: the empty word

    const double cov_lo2 = (r_cov - pad) * (r_cov - pad);
    std::vector<float> chart(layout.stride);

    // Float-grid prefilter with an exact fallback on the borderline band.
    auto is_covered = [&](const GroupElement& s, const float* c) {
        double best2 = std::numeric_limits<double>::infinity();
        cov_grid.query(c, [&](int i) {
            best2 = std::min(best2, chart_dist2(layout, c, centers.chart(i)));
            return true;
        });
        if (best2 <= cov_lo2) return true;
        if (best2 > (r_cov + pad) * (r_cov + pad)) return false;
        for (const GroupElement& cg : net.centers)
            if (distance(cg, s) <= r_cov) return true;
        return false;
    };

    // Installs a confirmed candidate as a center unless a separation
    // blocker already covers the patched sample (approx + sep < r_cov).
    auto place = [&](const Word& w, const GroupElement& v) {
        std::vector<float> vc(layout.stride);
        extract_chart(layout, v, vc.data());
        bool blocked = false;
        cov_grid.query(vc.data(), [&](int i) {
            if (chart_dist2(layout, vc.data(), centers.chart(i)) <
                (sep + pad) * (sep + pad) &&
                distance(net.centers[i], v) < sep) {
                blocked = true;
                return false;
            }
            return true;
        });
        if (blocked) return;
        int idx = centers.add(v);
        net.words.push_back(w);
        net.centers.push_back(v);
        net.max_word_len = std::max(net.max_word_len, w.size());
        cov_grid.insert(idx, centers.chart(idx));
    };

    // Slowly equidistributing pairs can need words longer than the bank
    // can store.  Those length tiers are scanned on demand; values landing
    // near the uncovered sample are added to the bank so one scan serves
    // the whole hole, and a per-build visit budget keeps a hopeless radius
    // from stalling the retry ladder above this call.
    long stream_left = 40'000'000;
    auto stream_admit = [&](const GroupElement& s) {
        for (int len = table_len + 1; len <= budgets.net_len_cap; ++len) {
            Word bw(2);
            GroupElement bv;
            double bd = std::numeric_limits<double>::infinity();
            bool out_of_budget = false;
            for_each_word_value(
                pair, len, len, [&](const Word& w, const GroupElement& v) {
                    if (--stream_left < 0) {
                        out_of_budget = true;
                        return false;
                    }
                    double d = distance(v, s);
                    if (d <= r_cov) {
                        int idx = cand_pts.add(v);
                        cand_grid.insert(idx, cand_pts.chart(idx));
                        for (int l : w.letters())
                            cand_letters.push_back(static_cast<int8_t>(l));
                        cand_off.push_back(
                            static_cast<int32_t>(cand_letters.size()));
                    }
                    if (d < bd) {
                        bd = d;
                        bw = w;
                        bv = v;
                    }
                    return bd > 0.5 * approx;
                });
            if (bd <= approx) {
                place(bw, bv);
                return;
            }
            if (out_of_budget)
                throw NetUnreachable(
                    "net candidate streaming budget exhausted before coverage",
                    len);
        }
        throw NetUnreachable("net coverage not reached at the word-length cap",
                             budgets.net_len_cap);
    };

    // Patches the hole at an uncovered sample: admit the nearest candidate,
    // growing the bank when nothing lies within the approximation radius.
    auto admit_for = [&](const GroupElement& s, const float* c) {
        for (;;) {
            int best = -1;
            double best2 = std::numeric_limits<double>::infinity();
            cand_grid.query(c, [&](int i) {
                double d2 = chart_dist2(layout, c, cand_pts.chart(i));
                if (d2 < best2) {
                    best2 = d2;
                    best = i;
                }
                return true;
            });
            if (best >= 0 && best2 <= approx * approx) {
                Word w = cand_word(best);
                GroupElement v = evaluate(w, pair);
                if (distance(v, s) <= approx) {
                    place(w, v);
                    return;
                }
            }
            if (table_len >= budgets.net_len_cap)
                throw NetUnreachable(
                    "net coverage not reached at the word-length cap",
                    budgets.net_len_cap);
            if (count_reduced_words(2, table_len + 1) > table_value_cap) {
                stream_admit(s);
                return;
            }
            grow_table();
        }
    };

    // Demand-driven construction: stream Haar samples and patch every hole
    // until a long stretch arrives fully covered.
    Rng probe_rng = rng.fork(17);
    const long settle = std::max(confidence_samples, 20000);
    const long sample_cap = 200 * settle;
    long consecutive = 0;
    for (long drawn = 0; consecutive < settle; ++drawn) {
        if (drawn > sample_cap)
            throw NetUnreachable("net coverage did not settle within the "
                                 "sampling budget",
                                 budgets.net_len_cap);
        GroupElement s = haar_sample(spec, probe_rng);
        extract_chart(layout, s, chart.data());
        if (is_covered(s, chart.data())) {
            ++consecutive;
            continue;
        }
        consecutive = 0;
        admit_for(s, chart.data());
    }

    // Recorded verification batch under a fresh seed; failures are patched
    // and the whole batch redrawn.
    for (int round = 0;; ++round) {
        std::uint64_t vseed = rng.engine()();
        Rng vrng(vseed);
        std::vector<GroupElement> failures;
        double worst = 0;
        for (int i = 0; i < confidence_samples; ++i) {
            GroupElement s = haar_sample(spec, vrng);
            extract_chart(layout, s, chart.data());
            double best2 = std::numeric_limits<double>::infinity();
            cov_grid.query(chart.data(), [&](int c) {
                best2 = std::min(best2, chart_dist2(layout, chart.data(),
                                                    centers.chart(c)));
                return true;
            });
            double best = std::sqrt(best2);
            if (best > r_cov - pad) {
                // Confirm against exact arithmetic before acting.
                double exact = std::numeric_limits<double>::infinity();
                for (const GroupElement& cg : net.centers)
                    exact = std::min(exact, distance(cg, s));
                best = exact;
            }
            if (best <= r_cov) {
                worst = std::max(worst, best);
            } else {
                failures.push_back(s);
            }
        }
        if (failures.empty()) {
            net.seed = vseed;
            net.max_verified_distance = worst;
            break;
        }
        if (round >= budgets.retries)
            throw NetUnreachable("net coverage kept failing verification",
                                 budgets.net_len_cap);
        for (const GroupElement& s : failures) {
            extract_chart(layout, s, chart.data());
            if (!is_covered(s, chart.data())) admit_for(s, chart.data());
        }
    }
    (void)thr;
    return net;
}

double net_margin(const NetTable& net) {
    double half = net.epsilon / 2;
    if (net.max_word_len <= 1) return half;
    return half / net.max_word_len;
}

std::pair<int, double> nearest_center(const NetTable& net,
                                      const GroupElement& target) {
    if (net.centers.empty()) throw InputError("net: no centers");
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < net.centers.size(); ++i) {
        double d = distance(net.centers[i], target);
        if (d < bd) {
            bd = d;
            best = static_cast<int>(i);
        }
    }
    return {best, bd};
}

double coverage_fraction(const NetTable& net, const GroupElement& x1,
                         const GroupElement& x2, double radius, int samples,
                         Rng& rng) {
    require_same_spec(net.pair_first.spec(), x1.spec(), "coverage");
    const std::vector<GroupElement> pair = {x1, x2};
    std::vector<GroupElement> values;
    values.reserve(net.words.size());
    for (const Word& w : net.words) values.push_back(evaluate(w, pair));

    const ChartLayout layout = ChartLayout::make(x1.spec());
    PointSet pts(layout);
    Grid grid(layout, radius);
    for (size_t i = 0; i < values.size(); ++i) {
        int idx = pts.add(values[i]);
        grid.insert(idx, pts.chart(idx));
    }
    std::vector<float> chart(layout.stride);
    const double pad = 1e-3 * radius;
    int hit = 0;
    for (int i = 0; i < samples; ++i) {
        GroupElement s = haar_sample(x1.spec_ptr(), rng);
        extract_chart(layout, s, chart.data());
        bool ok = false;
        grid.query(chart.data(), [&](int c) {
            if (chart_dist2(layout, chart.data(), pts.chart(c)) <=
                (radius - pad) * (radius - pad)) {
                ok = true;
                return false;
            }
            return true;
        });
        if (!ok) {
            // Borderline or missed by the float prefilter: exact pass.
            for (const GroupElement& v : values)
                if (distance(v, s) <= radius) {
                    ok = true;
                    break;
                }
        }
        if (ok) ++hit;
    }
    return static_cast<double>(hit) / samples;
}

}  // namespace liedeform
