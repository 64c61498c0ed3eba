#include "liedeform/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "liedeform/errors.hpp"

namespace liedeform {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Specs referenced by deserialized elements are interned so their lifetime
// covers the whole process.
SpecPtr intern_spec(const std::string& name) {
    static std::unordered_map<std::string, SpecPtr> cache;
    auto it = cache.find(name);
    if (it != cache.end()) return it->second;
    SpecPtr spec = GroupSpec::parse(name);
    cache.emplace(name, spec);
    return spec;
}

const json& need(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end())
        throw InputError(std::string("missing json key '") + key + "'");
    return *it;
}

double need_num(const json& j, const char* key) {
    const json& v = need(j, key);
    if (!v.is_number())
        throw InputError(std::string("json key '") + key + "' must be a number");
    return v.get<double>();
}

}  // namespace

json spec_to_json(const GroupSpec& spec) {
    json blocks = json::array();
    for (const Block& b : spec.blocks()) blocks.push_back(b.name());
    return json{{"blocks", blocks}};
}

const GroupSpec* spec_from_json(const json& j) {
    const json& blocks = need(j, "blocks");
    if (!blocks.is_array() || blocks.empty())
        throw InputError("spec json: 'blocks' must be a non-empty array");
    std::string name;
    for (const json& b : blocks) {
        if (!b.is_string()) throw InputError("spec json: block names expected");
        if (!name.empty()) name += 'x';
        name += b.get<std::string>();
    }
    return intern_spec(name).get();
}

json element_to_json(const GroupElement& g) {
    json entries = json::array();
    for (int b = 0; b < g.spec().num_blocks(); ++b) {
        json mat = json::array();
        if (g.spec().blocks()[b].kind == BlockKind::SU2) {
            const Eigen::Matrix2cd& u = g.su2_block(b);
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c)
                    mat.push_back(json::array(
                        {u(r, c).real(), u(r, c).imag()}));
        } else {
            const Eigen::MatrixXd& m = g.real_block(b);
            for (int r = 0; r < m.rows(); ++r)
                for (int c = 0; c < m.cols(); ++c) mat.push_back(m(r, c));
        }
        entries.push_back(std::move(mat));
    }
    return json{{"spec", spec_to_json(g.spec())}, {"entries", entries}};
}

GroupElement element_from_json(const json& j, const GroupSpec* spec,
                               const Thresholds& thr) {
    if (!spec) {
        spec = spec_from_json(need(j, "spec"));
    } else if (j.contains("spec")) {
        const GroupSpec* own = spec_from_json(j["spec"]);
        if (!(*own == *spec))
            throw InputError("element json: spec does not match context");
    }
    SpecPtr sp = intern_spec(spec->name());
    const json& entries = need(j, "entries");
    if (!entries.is_array() ||
        static_cast<int>(entries.size()) != sp->num_blocks())
        throw InputError("element json: wrong number of block entries");

    std::vector<BlockMatrix> blocks;
    for (int b = 0; b < sp->num_blocks(); ++b) {
        const Block& blk = sp->blocks()[b];
        const json& e = entries[b];
        if (blk.kind == BlockKind::SU2) {
            if (!e.is_array() || e.size() != 4)
                throw InputError("element json: su2 block needs 4 entries");
            Eigen::Matrix2cd u;
            for (int k = 0; k < 4; ++k) {
                const json& p = e[k];
                if (!p.is_array() || p.size() != 2)
                    throw InputError(
                        "element json: su2 entries are [re, im] pairs");
                u(k / 2, k % 2) = std::complex<double>(p[0].get<double>(),
                                                       p[1].get<double>());
            }
            blocks.emplace_back(u);
        } else {
            const int d = blk.matrix_dim();
            if (!e.is_array() || static_cast<int>(e.size()) != d * d)
                throw InputError(
                    "element json: real block entry count mismatch");
            Eigen::MatrixXd m(d, d);
            for (int k = 0; k < d * d; ++k) {
                if (!e[k].is_number())
                    throw InputError("element json: matrix entries must be "
                                     "numbers");
                m(k / d, k % d) = e[k].get<double>();
            }
            if (blk.is_torus()) {
                // Torus blocks must stay block-diagonal 2x2 rotations.
                for (int r = 0; r < d; ++r)
                    for (int c = 0; c < d; ++c)
                        if (r / 2 != c / 2 && std::abs(m(r, c)) > 1e-7)
                            throw InputError(
                                "element json: torus block is not "
                                "block-diagonal");
            } else if (m.determinant() < 0) {
                throw InputError("element json: block has determinant -1");
            }
            blocks.emplace_back(std::move(m));
        }
    }
    GroupElement g(sp, std::move(blocks));
    if (g.orthogonality_residual() > std::max(1e-7, thr.tau_orth))
        throw InputError("element json: block is not orthogonal/unitary");
    return g;
}

json tuple_to_json(const std::vector<GroupElement>& tuple) {
    if (tuple.empty()) throw InputError("tuple json: empty tuple");
    json elems = json::array();
    for (const GroupElement& g : tuple) {
        json e = element_to_json(g);
        e.erase("spec");  // stored once at tuple level
        elems.push_back(std::move(e));
    }
    return json{{"spec", spec_to_json(tuple[0].spec())}, {"elements", elems}};
}

std::vector<GroupElement> tuple_from_json(const json& j,
                                          const Thresholds& thr) {
    const GroupSpec* spec = spec_from_json(need(j, "spec"));
    const json& elems = need(j, "elements");
    if (!elems.is_array() || elems.empty())
        throw InputError("tuple json: 'elements' must be a non-empty array");
    std::vector<GroupElement> out;
    out.reserve(elems.size());
    for (const json& e : elems) out.push_back(element_from_json(e, spec, thr));
    return out;
}

json word_to_json(const Word& w) { return json(w.text()); }

Word word_from_json(const json& j, int rank) {
    if (!j.is_string()) throw InputError("word json: expected a string");
    return Word::parse(rank, j.get<std::string>());
}

json thresholds_to_json(const Thresholds& t) {
    return json{{"tau_orth", t.tau_orth},       {"tau_cut", t.tau_cut},
                {"tau_rank", t.tau_rank},       {"tau_torsion", t.tau_torsion},
                {"tau_newton", t.tau_newton},   {"tau_rel", t.tau_rel},
                {"tau_replay", t.tau_replay}};
}

Thresholds thresholds_from_json(const json& j) {
    Thresholds t;
    t.tau_orth = need_num(j, "tau_orth");
    t.tau_cut = need_num(j, "tau_cut");
    t.tau_rank = need_num(j, "tau_rank");
    t.tau_torsion = need_num(j, "tau_torsion");
    t.tau_newton = need_num(j, "tau_newton");
    t.tau_rel = need_num(j, "tau_rel");
    t.tau_replay = need_num(j, "tau_replay");
    return t;
}

json budgets_to_json(const Budgets& b) {
    return json{{"steer_len", b.steer_len},
                {"steer_start_len", b.steer_start_len},
                {"steer_candidates", b.steer_candidates},
                {"install_word_len", b.install_word_len},
                {"cert_word_len", b.cert_word_len},
                {"net_len_cap", b.net_len_cap},
                {"net_samples", b.net_samples},
                {"retries", b.retries},
                {"exhaustive_cap", b.exhaustive_cap}};
}

Budgets budgets_from_json(const json& j) {
    Budgets b;
    b.steer_len = static_cast<int>(need_num(j, "steer_len"));
    b.steer_start_len = static_cast<int>(need_num(j, "steer_start_len"));
    b.steer_candidates = static_cast<int>(need_num(j, "steer_candidates"));
    b.install_word_len = static_cast<int>(need_num(j, "install_word_len"));
    b.cert_word_len = static_cast<int>(need_num(j, "cert_word_len"));
    b.net_len_cap = static_cast<int>(need_num(j, "net_len_cap"));
    b.net_samples = static_cast<int>(need_num(j, "net_samples"));
    b.retries = static_cast<int>(need_num(j, "retries"));
    b.exhaustive_cap = static_cast<long>(need_num(j, "exhaustive_cap"));
    return b;
}

json certificate_to_json(const DensityCertificate& c) {
    json witnesses = json::array();
    for (const Word& w : c.nontorsion_witnesses)
        witnesses.push_back(word_to_json(w));
    return json{{"tuple", tuple_to_json(c.tuple)},
                {"algebra_full", c.algebra_full},
                {"per_factor_nontorsion", c.per_factor_nontorsion},
                {"nontorsion_witnesses", witnesses},
                {"abelian_dense", c.abelian_dense},
                {"qmax", c.qmax},
                {"cert_word_len", c.cert_word_len},
                {"all_true", c.all_true()}};
}

json net_to_json(const NetTable& net) {
    json words = json::array();
    for (const Word& w : net.words) words.push_back(word_to_json(w));
    return json{
        {"epsilon", net.epsilon},
        {"pair", tuple_to_json({net.pair_first, net.pair_second})},
        {"words", words},
        {"seed", net.seed},
        {"confidence_samples", net.confidence_samples},
        {"max_word_len", net.max_word_len},
        {"max_verified_distance", net.max_verified_distance}};
}

NetTable net_from_json(const json& j, const Thresholds& thr) {
    NetTable net;
    net.epsilon = need_num(j, "epsilon");
    auto pair = tuple_from_json(need(j, "pair"), thr);
    if (pair.size() != 2) throw InputError("net json: pair must have size 2");
    net.pair_first = pair[0];
    net.pair_second = pair[1];
    const json& words = need(j, "words");
    if (!words.is_array()) throw InputError("net json: 'words' must be array");
    for (const json& w : words)
        net.words.push_back(word_from_json(w, 2));
    net.seed = need(j, "seed").get<std::uint64_t>();
    net.confidence_samples = static_cast<int>(need_num(j, "confidence_samples"));
    net.max_word_len = static_cast<int>(need_num(j, "max_word_len"));
    net.max_verified_distance = need_num(j, "max_verified_distance");
    net.centers.reserve(net.words.size());
    for (const Word& w : net.words)
        net.centers.push_back(evaluate(w, pair));
    return net;
}

json move_to_json(const Move& m) {
    switch (m.kind) {
        case Move::Kind::LeftMultiply:
            return json{{"kind", "left_multiply"},
                        {"target", m.target},
                        {"multiplier", word_to_json(m.multiplier)}};
        case Move::Kind::InvertEntry:
            return json{{"kind", "invert"}, {"target", m.target}};
        case Move::Kind::SwapEntries:
            return json{{"kind", "swap"},
                        {"target", m.target},
                        {"other", m.other}};
    }
    throw InputError("move json: unknown kind");
}

Move move_from_json(const json& j, int rank) {
    const std::string kind = need(j, "kind").get<std::string>();
    int target = static_cast<int>(need_num(j, "target"));
    if (kind == "left_multiply")
        return left_multiply_move(target,
                                  word_from_json(need(j, "multiplier"), rank));
    if (kind == "invert") return invert_move(target);
    if (kind == "swap")
        return swap_move(target, static_cast<int>(need_num(j, "other")));
    throw InputError("move json: unknown kind '" + kind + "'");
}

json move_certificate_to_json(const MoveCertificate& c) {
    json prov = json::array();
    int prov_rank = 0;
    for (const Word& w : c.provenance) {
        prov.push_back(word_to_json(w));
        prov_rank = w.rank();
    }
    json moves = json::array();
    for (const Move& m : c.moves) moves.push_back(move_to_json(m));
    return json{{"initial", tuple_to_json(c.initial)},
                {"provenance_rank", prov_rank},
                {"provenance", prov},
                {"moves", moves},
                {"final", tuple_to_json(c.final_tuple)},
                {"seed", c.seed},
                {"qmax", c.qmax},
                {"epsilon", c.epsilon},
                {"budgets", budgets_to_json(c.budgets)}};
}

MoveCertificate move_certificate_from_json(const json& j,
                                           const Thresholds& thr) {
    MoveCertificate c;
    c.initial = tuple_from_json(need(j, "initial"), thr);
    const int n = static_cast<int>(c.initial.size());
    const int prov_rank = static_cast<int>(need_num(j, "provenance_rank"));
    for (const json& w : need(j, "provenance"))
        c.provenance.push_back(word_from_json(w, prov_rank));
    for (const json& m : need(j, "moves"))
        c.moves.push_back(move_from_json(m, n));
    c.final_tuple = tuple_from_json(need(j, "final"), thr);
    c.seed = need(j, "seed").get<std::uint64_t>();
    c.qmax = static_cast<long>(need_num(j, "qmax"));
    c.epsilon = need_num(j, "epsilon");
    c.budgets = budgets_from_json(need(j, "budgets"));
    return c;
}

json fa_witness_to_json(const FAWitness& w) {
    return json{{"a_prime", element_to_json(w.a_prime)},
                {"b_prime", element_to_json(w.b_prime)},
                {"order_a", w.order_a},
                {"order_b", w.order_b},
                {"order_ab", w.order_ab},
                {"conj_a", element_to_json(w.conj_a)},
                {"conj_b", element_to_json(w.conj_b)},
                {"deform_a", w.deform_a},
                {"deform_b", w.deform_b},
                {"residual", w.residual},
                {"iterations", w.iterations},
                {"residual_history", w.residual_history},
                {"certificate", w.certificate.tuple.empty()
                                    ? json(nullptr)
                                    : certificate_to_json(w.certificate)}};
}

json z2_result_to_json(const Z2Result& r) {
    json rel = pair_relation_scan_to_json(r.relation_report);
    // The implied multiples of 2*pi at the reported near-relation.
    json ks = json::array();
    try {
        Thresholds thr;
        auto theta = rotation_angles(r.c_prime, thr);
        auto alpha = rotation_angles(r.conjugated_a, thr);
        for (size_t i = 0; i < theta.size() && i < alpha.size(); ++i) {
            double v = r.relation_report.argmin_m * theta[i] +
                       r.relation_report.argmin_n * alpha[i];
            ks.push_back(std::lround(v / kTwoPi));
        }
    } catch (const Error&) {
        // Non-regular corner: leave the coefficient list empty.
    }
    rel["argmin_two_pi"] = ks;
    return json{{"a_prime", element_to_json(r.a_prime)},
                {"b_prime", element_to_json(r.b_prime)},
                {"c_prime", element_to_json(r.c_prime)},
                {"gamma", word_to_json(r.gamma)},
                {"conjugated_a", element_to_json(r.conjugated_a)},
                {"dist_c", r.dist_c},
                {"relation", rel},
                {"certificate", certificate_to_json(r.certificate)}};
}

json walk_stats_to_json(const WalkStats& s) {
    return json{{"steps", s.steps},
                {"burn_in", s.burn_in},
                {"thinning", s.thinning},
                {"samples", s.samples},
                {"seed", s.seed},
                {"start_in_y", s.start_in_y},
                {"final_in_y", s.final_in_y},
                {"mean_trace", s.mean_trace},
                {"mean_trace_sq", s.mean_trace_sq},
                {"mean_pair", s.mean_pair},
                {"final_tuple", tuple_to_json(s.final_tuple)}};
}

json relation_scan_to_json(const RelationScan& s) {
    json out{{"relation_found", s.relation_found},
             {"method", s.method},
             {"bound", s.bound},
             {"tol", s.tol},
             {"min_residual", s.min_residual},
             {"argmin", s.argmin}};
    if (s.relation_found)
        out["hit"] = json{{"coeffs", s.hit.coeffs},
                          {"round_term", s.hit.round_term},
                          {"residual", s.hit.residual}};
    return out;
}

json pair_relation_scan_to_json(const PairRelationScan& s) {
    return json{{"relation_found", s.relation_found},
                {"m", s.m},
                {"n", s.n},
                {"min_residual", s.min_residual},
                {"argmin_m", s.argmin_m},
                {"argmin_n", s.argmin_n},
                {"bound", s.bound},
                {"tol", s.tol},
                {"pairs_checked", s.pairs_checked}};
}

json manifest_to_json(const ExperimentManifest& m) {
    return json{{"command", m.command},
                {"version", m.version},
                {"config", m.config},
                {"arguments", m.arguments},
                {"seed", m.seed},
                {"input_digests", m.input_digests},
                {"output_digests", m.output_digests}};
}

ExperimentManifest manifest_from_json(const json& j) {
    ExperimentManifest m;
    m.command = need(j, "command").get<std::string>();
    m.version = need(j, "version").get<std::string>();
    m.config = need(j, "config");
    m.arguments = need(j, "arguments");
    m.seed = need(j, "seed").get<std::uint64_t>();
    for (auto& [k, v] : need(j, "input_digests").items())
        m.input_digests[k] = v.get<std::string>();
    for (auto& [k, v] : need(j, "output_digests").items())
        m.output_digests[k] = v.get<std::string>();
    return m;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string digest_hex(const std::string& bytes) {
    static const char* hex = "0123456789abcdef";
    std::uint64_t h = fnv1a64(bytes);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = hex[h & 0xf];
        h >>= 4;
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write file: " + path);
    out << content;
    if (!out) throw InputError("write failed: " + path);
}

json load_json_file(const std::string& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw InputError("malformed json in " + path + ": " + e.what());
    }
}

std::string dump_canonical(const json& j) { return j.dump(2) + "\n"; }

void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, dump_canonical(j));
}

}  // namespace liedeform
