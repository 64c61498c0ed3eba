// liedeform command line tool.  Every subcommand reads JSON inputs, writes
// JSON outputs, and drops a <out>.manifest.json recording resolved
// configuration plus input/output digests so any run can be reproduced.

#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "liedeform/algebra.hpp"
#include "liedeform/config.hpp"
#include "liedeform/errors.hpp"
#include "liedeform/group.hpp"
#include "liedeform/json_io.hpp"
#include "liedeform/net.hpp"
#include "liedeform/nielsen.hpp"
#include "liedeform/rng.hpp"
#include "liedeform/torsion.hpp"
#include "liedeform/walk.hpp"
#include "liedeform/words.hpp"

namespace {

using liedeform::json;

constexpr const char* kVersion = "0.1.0";

// Shared state for one command execution.  Runners read their parameters
// from `args` so that a manifest re-execution can drive them identically.
struct Ctx {
    liedeform::Thresholds thr;
    liedeform::Budgets bud;
    std::uint64_t seed = 0;
    json args = json::object();
    std::map<std::string, std::string> input_digests;
    std::map<std::string, std::string> output_digests;
    std::string out_suffix;  // ".rerun" while re-executing a manifest

    json read_input(const std::string& path) {
        std::string raw = liedeform::read_text_file(path);
        input_digests[path] = liedeform::digest_hex(raw);
        try {
            return json::parse(raw);
        } catch (const json::parse_error& e) {
            throw liedeform::InputError(path + ": " + e.what());
        }
    }
    void write_output_text(const std::string& path, const std::string& s) {
        liedeform::write_text_file(path + out_suffix, s);
        output_digests[path] = liedeform::digest_hex(s);
    }
    void write_output_json(const std::string& path, const json& j) {
        write_output_text(path, liedeform::dump_canonical(j));
    }
    json config_json() const {
        return json{{"thresholds", liedeform::thresholds_to_json(thr)},
                    {"budgets", liedeform::budgets_to_json(bud)}};
    }
    void set_config(const json& cfg) {
        json tj = liedeform::thresholds_to_json(liedeform::Thresholds{});
        json bj = liedeform::budgets_to_json(liedeform::Budgets{});
        if (cfg.contains("thresholds")) tj.merge_patch(cfg.at("thresholds"));
        if (cfg.contains("budgets")) bj.merge_patch(cfg.at("budgets"));
        thr = liedeform::thresholds_from_json(tj);
        bud = liedeform::budgets_from_json(bj);
    }

    std::string arg_str(const char* k) const { return args.at(k).get<std::string>(); }
    double arg_num(const char* k) const { return args.at(k).get<double>(); }
    long arg_long(const char* k) const { return args.at(k).get<long>(); }
    int arg_int(const char* k) const { return args.at(k).get<int>(); }
    bool has_arg(const char* k) const {
        return args.contains(k) && !args.at(k).is_null() &&
               !(args.at(k).is_string() && args.at(k).get<std::string>().empty());
    }

    void emit_manifest(const std::string& command, const std::string& anchor) {
        liedeform::ExperimentManifest m;
        m.command = command;
        m.version = kVersion;
        m.config = config_json();
        m.arguments = args;
        m.seed = seed;
        m.input_digests = input_digests;
        m.output_digests = output_digests;
        liedeform::write_text_file(
            anchor + ".manifest.json" + out_suffix,
            liedeform::dump_canonical(liedeform::manifest_to_json(m)));
    }
};

std::vector<liedeform::GroupElement> load_tuple(Ctx& ctx, const std::string& path,
                                                const liedeform::GroupSpec& spec,
                                                std::size_t want,
                                                const char* what) {
    auto tuple = liedeform::tuple_from_json(ctx.read_input(path), ctx.thr);
    if (want != 0 && tuple.size() != want)
        throw liedeform::InputError(std::string(what) + ": expected " +
                                    std::to_string(want) + " elements, file has " +
                                    std::to_string(tuple.size()));
    if (tuple.empty())
        throw liedeform::InputError(std::string(what) + ": empty tuple");
    if (!(tuple[0].spec() == spec))
        throw liedeform::InputError(std::string(what) + ": group " +
                                    tuple[0].spec().name() +
                                    " does not match --group " + spec.name());
    return tuple;
}

int run_deform(Ctx& ctx) {
    auto spec = liedeform::GroupSpec::parse(ctx.arg_str("group"));
    const int n = ctx.arg_int("n");
    auto targets = load_tuple(ctx, ctx.arg_str("targets"), *spec,
                              static_cast<std::size_t>(n), "targets");
    auto gamma = load_tuple(ctx, ctx.arg_str("gamma"), *spec,
                            static_cast<std::size_t>(n - 1), "gamma");
    liedeform::DeformationProblem p;
    p.spec = &targets[0].spec();
    p.targets = targets;
    p.gamma = gamma;
    p.epsilon = ctx.arg_num("eps");
    p.qmax = ctx.arg_long("qmax");
    p.seed = ctx.seed;
    p.thresholds = ctx.thr;
    p.budgets = ctx.bud;

    const std::string mode = ctx.arg_str("mode");
    liedeform::DeformationResult res;
    if (mode == "semisimple") {
        res = liedeform::deform_to_generate(p);
    } else if (mode == "general") {
        res = liedeform::general_deform(p);
    } else {
        throw liedeform::InputError("--mode must be semisimple or general");
    }

    json dist = json::array();
    double worst = 0;
    for (std::size_t i = 0; i < res.tuple.size(); ++i) {
        double d = liedeform::distance(res.tuple[i], targets[i]);
        if (d > worst) worst = d;
        dist.push_back(d);
    }
    json out{{"mode", mode},
             {"epsilon", p.epsilon},
             {"final", liedeform::tuple_to_json(res.tuple)},
             {"certificate", liedeform::move_certificate_to_json(res.certificate)},
             {"distances", dist},
             {"max_distance", worst},
             {"net", res.net ? liedeform::net_to_json(*res.net) : json(nullptr)}};
    const std::string out_path = ctx.arg_str("out");
    ctx.write_output_json(out_path, out);
    ctx.emit_manifest("deform", out_path);
    std::printf("deform: %zu entries, max target distance %.6g (eps %.6g)\n",
                res.tuple.size(), worst, p.epsilon);
    return 0;
}

int run_fa_witness(Ctx& ctx) {
    auto spec = liedeform::GroupSpec::parse(ctx.arg_str("group"));
    auto pair = load_tuple(ctx, ctx.arg_str("pair"), *spec, 2, "pair");
    const double eps = ctx.arg_num("eps");
    const long qmax = ctx.arg_long("qmax");
    liedeform::Rng rng(ctx.seed);
    auto w = liedeform::fa_witness(pair[0], pair[1], eps, qmax, rng, ctx.thr,
                                   ctx.bud);
    json out = liedeform::fa_witness_to_json(w);
    out["projection_bound"] = liedeform::torsion_projection_bound(*spec, qmax);
    const std::string out_path = ctx.arg_str("out");
    ctx.write_output_json(out_path, out);
    ctx.emit_manifest("fa-witness", out_path);
    std::printf("fa-witness: orders %lld, %lld, %lld; deformations %.6g, %.6g\n",
                w.order_a, w.order_b, w.order_ab, w.deform_a, w.deform_b);
    return 0;
}

int run_z2(Ctx& ctx) {
    auto spec = liedeform::GroupSpec::parse(ctx.arg_str("group"));
    auto triple = load_tuple(ctx, ctx.arg_str("triple"), *spec, 3, "triple");
    liedeform::Rng rng(ctx.seed);
    auto r = liedeform::z2_example(triple[0], triple[1], triple[2],
                                   ctx.arg_num("eps"), ctx.arg_int("max_len"),
                                   ctx.arg_long("bound"), ctx.arg_long("qmax"),
                                   rng, ctx.thr, ctx.bud);
    const std::string out_path = ctx.arg_str("out");
    ctx.write_output_json(out_path, liedeform::z2_result_to_json(r));
    ctx.emit_manifest("z2", out_path);
    std::printf("z2: c moved %.6g, relation %s\n", r.dist_c,
                r.relation_report.relation_found ? "FOUND (degenerate)" : "none");
    return 0;
}

int run_walk(Ctx& ctx) {
    auto spec = liedeform::GroupSpec::parse(ctx.arg_str("group"));
    liedeform::WalkConfig cfg;
    cfg.spec = spec.get();
    cfg.n = ctx.arg_int("n");
    cfg.steps = ctx.arg_long("steps");
    cfg.burn_in = ctx.arg_long("burn_in");
    cfg.thinning = ctx.arg_long("thinning");
    cfg.seed = ctx.seed;
    cfg.qmax = ctx.arg_long("qmax");
    const std::string ms = ctx.arg_str("move_set");
    if (ms == "full") {
        cfg.move_set = liedeform::MoveSet::Full;
    } else if (ms == "restricted") {
        cfg.move_set = liedeform::MoveSet::RestrictedL21L31;
    } else {
        throw liedeform::InputError("--move-set must be full or restricted");
    }

    std::vector<liedeform::GroupElement> start;
    if (ctx.has_arg("start")) {
        start = load_tuple(ctx, ctx.arg_str("start"), *spec,
                           static_cast<std::size_t>(cfg.n), "start");
    } else {
        // Start sampling uses a derived stream so stats.seed stays the
        // user-visible seed driving the walk itself.
        liedeform::Rng srng(ctx.seed ^ 0x517cc1b727220a95ULL);
        for (int i = 0; i < cfg.n; ++i)
            start.push_back(liedeform::haar_sample(spec, srng));
    }

    std::vector<std::string> rows;
    const bool want_csv = ctx.has_arg("csv");
    auto stats = liedeform::run_walk(cfg, start, want_csv ? &rows : nullptr);
    if (want_csv) {
        std::string body;
        for (const auto& r : rows) {
            body += r;
            body += '\n';
        }
        ctx.write_output_text(ctx.arg_str("csv"), body);
    }
    const std::string out_path = ctx.arg_str("out");
    ctx.write_output_json(out_path, liedeform::walk_stats_to_json(stats));
    ctx.emit_manifest("walk", out_path);
    double t0 = stats.mean_trace.empty() ? 0.0 : stats.mean_trace[0];
    std::printf("walk: %ld steps, %ld samples, mean trace[0] %.6g, Y %s->%s\n",
                stats.steps, stats.samples, t0,
                stats.start_in_y ? "yes" : "no",
                stats.final_in_y ? "yes" : "no");
    return 0;
}

int run_net(Ctx& ctx) {
    auto spec = liedeform::GroupSpec::parse(ctx.arg_str("group"));
    auto pair = load_tuple(ctx, ctx.arg_str("pair"), *spec, 2, "pair");
    liedeform::Rng rng(ctx.seed);
    auto net = liedeform::build_net(pair[0], pair[1], ctx.arg_num("eps"),
                                    ctx.arg_int("samples"), rng, ctx.thr,
                                    ctx.bud);
    json out = liedeform::net_to_json(net);
    out["margin"] = liedeform::net_margin(net);
    const std::string out_path = ctx.arg_str("out");
    ctx.write_output_json(out_path, out);
    ctx.emit_manifest("net", out_path);
    std::printf("net: %zu centers, epsilon %.6g, margin %.6g\n",
                net.words.size(), net.epsilon, liedeform::net_margin(net));
    return 0;
}

int run_certify(Ctx& ctx) {
    auto spec = liedeform::GroupSpec::parse(ctx.arg_str("group"));
    auto tuple = load_tuple(ctx, ctx.arg_str("tuple"), *spec, 0, "tuple");
    auto cert = liedeform::dense_tuple_certificate(tuple, ctx.arg_long("qmax"),
                                                   ctx.thr, ctx.bud);
    const std::string out_path = ctx.arg_str("out");
    ctx.write_output_json(out_path, liedeform::certificate_to_json(cert));
    ctx.emit_manifest("certify", out_path);
    std::printf("certify: %s\n", cert.all_true() ? "all-true" : "NOT dense-certified");
    return 0;
}

int run_replay(Ctx& ctx) {
    json cj = ctx.read_input(ctx.arg_str("cert"));
    if (cj.contains("certificate")) cj = cj.at("certificate");  // deform output
    auto cert = liedeform::move_certificate_from_json(cj, ctx.thr);
    auto tuple = liedeform::replay(cert, ctx.thr);  // throws ReplayMismatch
    double worst = 0;
    for (std::size_t i = 0; i < tuple.size(); ++i) {
        double d = liedeform::distance(tuple[i], cert.final_tuple[i]);
        if (d > worst) worst = d;
    }
    json out{{"replayed", liedeform::tuple_to_json(tuple)},
             {"moves", cert.moves.size()},
             {"max_residual", worst}};
    const std::string out_path = ctx.arg_str("out");
    ctx.write_output_json(out_path, out);
    ctx.emit_manifest("replay", out_path);
    std::printf("replay: %zu moves ok, max residual %.3g\n", cert.moves.size(),
                worst);
    return 0;
}

int dispatch(const std::string& command, Ctx& ctx) {
    if (command == "deform") return run_deform(ctx);
    if (command == "fa-witness") return run_fa_witness(ctx);
    if (command == "z2") return run_z2(ctx);
    if (command == "walk") return run_walk(ctx);
    if (command == "net") return run_net(ctx);
    if (command == "certify") return run_certify(ctx);
    if (command == "replay") return run_replay(ctx);
    throw liedeform::InputError("manifest: unknown command " + command);
}

int run_rerun(Ctx& ctx, const std::string& manifest_path) {
    auto m = liedeform::manifest_from_json(ctx.read_input(manifest_path));
    for (const auto& [path, digest] : m.input_digests) {
        std::string now = liedeform::digest_hex(liedeform::read_text_file(path));
        if (now != digest) {
            std::fprintf(stderr, "rerun: input %s changed (digest %s, was %s)\n",
                         path.c_str(), now.c_str(), digest.c_str());
            return 1;
        }
    }
    Ctx sub;
    sub.set_config(m.config);
    sub.seed = m.seed;
    sub.args = m.arguments;
    sub.out_suffix = ".rerun";
    int rc = dispatch(m.command, sub);
    if (rc != 0) return rc;
    bool ok = true;
    for (const auto& [path, digest] : m.output_digests) {
        auto it = sub.output_digests.find(path);
        if (it == sub.output_digests.end() || it->second != digest) {
            std::fprintf(stderr, "rerun: output %s not reproduced\n", path.c_str());
            ok = false;
        }
    }
    for (const auto& [path, digest] : sub.output_digests)
        if (!m.output_digests.count(path)) {
            std::fprintf(stderr, "rerun: unexpected extra output %s\n", path.c_str());
            ok = false;
        }
    if (!ok) return 3;
    std::printf("rerun: %s reproduced, %zu outputs bit-identical\n",
                m.command.c_str(), m.output_digests.size());
    return 0;
}

struct CommonFlags {
    std::string config_path;
    std::string budget_path;
    std::uint64_t seed = 0;
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonFlags& cf, bool with_seed = true) {
    cmd->add_option("--config", cf.config_path,
                    "JSON file overriding thresholds/budgets");
    cmd->add_option("--budget", cf.budget_path,
                    "JSON file overriding budgets only");
    if (with_seed) cmd->add_option("--seed", cf.seed, "random seed");
    cmd->add_option("--threads", cf.threads,
                    "worker threads (results are independent of this)");
}

void apply_common(Ctx& ctx, const CommonFlags& cf) {
    if (cf.threads < 1) throw liedeform::InputError("--threads must be >= 1");
    if (!cf.config_path.empty()) ctx.set_config(ctx.read_input(cf.config_path));
    if (!cf.budget_path.empty()) {
        json bf = ctx.read_input(cf.budget_path);
        json bj = liedeform::budgets_to_json(ctx.bud);
        bj.merge_patch(bf.contains("budgets") ? bf.at("budgets") : bf);
        ctx.bud = liedeform::budgets_from_json(bj);
    }
    ctx.seed = cf.seed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deformation experiments on compact groups"};
    app.set_version_flag("--version", std::string("liedeform ") + kVersion);
    app.require_subcommand(1);

    Ctx ctx;
    std::string pending;  // subcommand to dispatch after parsing

    // deform
    auto* cd = app.add_subcommand("deform", "deform a dense tuple onto targets");
    CommonFlags cf_d;
    std::string d_group, d_targets, d_gamma, d_out, d_mode = "semisimple";
    int d_n = 0;
    double d_eps = 0;
    long d_qmax = 200;
    cd->add_option("--group", d_group, "group spec, e.g. so3 or so3xtorus1")
        ->required();
    cd->add_option("--n", d_n, "tuple length")->required();
    cd->add_option("--targets", d_targets, "JSON tuple of n targets")->required();
    cd->add_option("--gamma", d_gamma, "JSON tuple of n-1 dense generators")
        ->required();
    cd->add_option("--eps", d_eps, "target ball radius")->required();
    cd->add_option("--qmax", d_qmax, "torsion search bound");
    cd->add_option("--mode", d_mode, "semisimple | general");
    cd->add_option("--out", d_out, "output JSON path")->required();
    add_common(cd, cf_d);
    cd->callback([&] {
        apply_common(ctx, cf_d);
        ctx.args = json{{"group", d_group}, {"n", d_n},
                        {"targets", d_targets}, {"gamma", d_gamma},
                        {"eps", d_eps}, {"qmax", d_qmax}, {"mode", d_mode},
                        {"out", d_out}, {"threads", cf_d.threads}};
        pending = "deform";
    });

    // fa-witness
    auto* cf = app.add_subcommand("fa-witness",
                                  "deform a pair to a torsion-generated one");
    CommonFlags cf_f;
    std::string f_group, f_pair, f_out;
    double f_eps = 0;
    long f_qmax = 200;
    cf->add_option("--group", f_group, "group spec (semisimple)")->required();
    cf->add_option("--pair", f_pair, "JSON tuple of 2 elements")->required();
    cf->add_option("--eps", f_eps, "deformation radius")->required();
    cf->add_option("--qmax", f_qmax, "torsion order bound");
    cf->add_option("--out", f_out, "output JSON path")->required();
    add_common(cf, cf_f);
    cf->callback([&] {
        apply_common(ctx, cf_f);
        ctx.args = json{{"group", f_group}, {"pair", f_pair}, {"eps", f_eps},
                        {"qmax", f_qmax}, {"out", f_out},
                        {"threads", cf_f.threads}};
        pending = "fa-witness";
    });

    // z2
    auto* cz = app.add_subcommand("z2", "torus-pair deformation with no short relation");
    CommonFlags cf_z;
    std::string z_group, z_triple, z_out;
    double z_eps = 0;
    int z_max_len = 12;
    long z_bound = 20, z_qmax = 200;
    cz->add_option("--group", z_group, "group spec")->required();
    cz->add_option("--triple", z_triple, "JSON tuple of 3 elements")->required();
    cz->add_option("--eps", z_eps, "deformation radius")->required();
    cz->add_option("--max-len", z_max_len, "conjugating word length cap");
    cz->add_option("--bound", z_bound, "integer relation coefficient bound");
    cz->add_option("--qmax", z_qmax, "torsion search bound");
    cz->add_option("--out", z_out, "output JSON path")->required();
    add_common(cz, cf_z);
    cz->callback([&] {
        apply_common(ctx, cf_z);
        ctx.args = json{{"group", z_group}, {"triple", z_triple}, {"eps", z_eps},
                        {"max_len", z_max_len}, {"bound", z_bound},
                        {"qmax", z_qmax}, {"out", z_out},
                        {"threads", cf_z.threads}};
        pending = "z2";
    });

    // walk
    auto* cw = app.add_subcommand("walk", "product replacement walk with trace stats");
    CommonFlags cf_w;
    std::string w_group, w_out, w_csv, w_start, w_move_set = "full";
    int w_n = 3;
    long w_steps = 0, w_burn = -1, w_thin = 10, w_qmax = 200;
    cw->add_option("--group", w_group, "group spec")->required();
    cw->add_option("--n", w_n, "tuple length (>= 3 for Y tracking)");
    cw->add_option("--steps", w_steps, "walk length")->required();
    cw->add_option("--burn-in", w_burn, "discarded prefix (default steps/10)");
    cw->add_option("--thinning", w_thin, "sample every k-th step");
    cw->add_option("--move-set", w_move_set, "full | restricted");
    cw->add_option("--qmax", w_qmax, "torsion bound for Y membership");
    cw->add_option("--start", w_start, "JSON tuple to start from (default Haar)");
    cw->add_option("--csv", w_csv, "per-sample CSV output path");
    cw->add_option("--out", w_out, "output JSON path")->required();
    add_common(cw, cf_w);
    cw->callback([&] {
        apply_common(ctx, cf_w);
        long burn = w_burn >= 0 ? w_burn : w_steps / 10;
        ctx.args = json{{"group", w_group}, {"n", w_n}, {"steps", w_steps},
                        {"burn_in", burn}, {"thinning", w_thin},
                        {"move_set", w_move_set}, {"qmax", w_qmax},
                        {"start", w_start}, {"csv", w_csv}, {"out", w_out},
                        {"threads", cf_w.threads}};
        pending = "walk";
    });

    // net
    auto* cn = app.add_subcommand("net", "two-letter word net covering the group");
    CommonFlags cf_n;
    std::string n_group, n_pair, n_out;
    double n_eps = 0;
    int n_samples = 10000;
    cn->add_option("--group", n_group, "group spec")->required();
    cn->add_option("--pair", n_pair, "JSON tuple of 2 dense generators")->required();
    cn->add_option("--eps", n_eps, "net parameter (covers at eps/2)")->required();
    cn->add_option("--samples", n_samples, "Monte Carlo coverage samples");
    cn->add_option("--out", n_out, "output JSON path")->required();
    add_common(cn, cf_n);
    cn->callback([&] {
        apply_common(ctx, cf_n);
        ctx.args = json{{"group", n_group}, {"pair", n_pair}, {"eps", n_eps},
                        {"samples", n_samples}, {"out", n_out},
                        {"threads", cf_n.threads}};
        pending = "net";
    });

    // certify
    auto* cc = app.add_subcommand("certify", "density certificate for a tuple");
    CommonFlags cf_c;
    std::string c_group, c_tuple, c_out;
    long c_qmax = 200;
    cc->add_option("--group", c_group, "group spec")->required();
    cc->add_option("--tuple", c_tuple, "JSON tuple")->required();
    cc->add_option("--qmax", c_qmax, "torsion search bound");
    cc->add_option("--out", c_out, "output JSON path")->required();
    add_common(cc, cf_c, /*with_seed=*/false);
    cc->callback([&] {
        apply_common(ctx, cf_c);
        ctx.args = json{{"group", c_group}, {"tuple", c_tuple},
                        {"qmax", c_qmax}, {"out", c_out},
                        {"threads", cf_c.threads}};
        pending = "certify";
    });

    // replay
    auto* cr = app.add_subcommand("replay", "re-apply a move certificate");
    CommonFlags cf_r;
    std::string r_cert, r_out;
    cr->add_option("--cert", r_cert, "MoveCertificate JSON (or deform output)")
        ->required();
    cr->add_option("--out", r_out, "output JSON path")->required();
    add_common(cr, cf_r, /*with_seed=*/false);
    cr->callback([&] {
        apply_common(ctx, cf_r);
        ctx.args = json{{"cert", r_cert}, {"out", r_out},
                        {"threads", cf_r.threads}};
        pending = "replay";
    });

    // rerun
    auto* cx = app.add_subcommand("rerun", "re-execute a manifest and compare digests");
    std::string x_manifest;
    cx->add_option("--manifest", x_manifest, "manifest JSON path")->required();
    cx->callback([&] { pending = "rerun"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (pending == "rerun") return run_rerun(ctx, x_manifest);
        return dispatch(pending, ctx);
    } catch (const liedeform::InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const liedeform::ReplayMismatch& e) {
        std::fprintf(stderr, "certification error: %s\n", e.what());
        return 3;
    } catch (const liedeform::CertificationFailed& e) {
        std::fprintf(stderr, "certification error: %s\n", e.what());
        return 3;
    } catch (const liedeform::Error& e) {
        std::fprintf(stderr, "budget error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
