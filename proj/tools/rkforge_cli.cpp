// rkforge command-line front end: tree/condition tables, candidate search,
// error refinement, tableau verification, and work-precision benchmarks.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rkforge/integrate.hpp"
#include "rkforge/objective.hpp"
#include "rkforge/optimizer.hpp"
#include "rkforge/program.hpp"
#include "rkforge/tableau.hpp"
#include "rkforge/tree.hpp"

namespace {

using namespace rkforge;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

std::vector<int> parse_ladder(const std::string& text) {
    std::vector<int> ladder;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        const std::string part = text.substr(pos, comma - pos);
        if (part.empty()) throw CLI::ValidationError("--precision", "empty limb count");
        ladder.push_back(std::stoi(part));
        pos = comma + 1;
    }
    return ladder;
}

// Best-known stage counts for each order (optimal for p <= 8).
int best_known_stages(int p) {
    static constexpr int table[] = {1, 2, 3, 4, 6, 7, 9, 11, 13, 16};
    return p >= 1 && p <= 10 ? table[p - 1] : -1;
}

int cmd_trees(int p) {
    const auto counts = tree_counts(p);
    std::printf("%4s %10s %12s\n", "n", "|T_n|", "cumulative");
    std::int64_t cum = 0;
    for (int n = 1; n <= p; ++n) {
        cum += counts[static_cast<std::size_t>(n - 1)];
        std::printf("%4d %10" PRId64 " %12" PRId64 "\n", n, counts[static_cast<std::size_t>(n - 1)], cum);
    }
    std::printf("\n%4s %6s %12s %10s\n", "p", "s", "conditions", "variables");
    cum = 0;
    for (int n = 1; n <= p; ++n) {
        cum += counts[static_cast<std::size_t>(n - 1)];
        const int s = best_known_stages(n);
        if (s > 0)
            std::printf("%4d %6d %12" PRId64 " %10d\n", n, s, cum, s * (s + 1) / 2);
        else
            std::printf("%4d %6s %12" PRId64 " %10s\n", n, "-", cum, "-");
    }
    return kExitPass;
}

struct SearchConfig {
    int p = 3;
    int s = 3;
    int count = 10;
    std::uint64_t seed = 0;
    std::string precision = "1,2";
    long max_iters = 10000;
    double promote = 0.0;
    double tol = 0.0;
    int threads = 0;
    std::string out_dir = "runs";
    bool logs = false;
};

SearchOptions make_options(const std::string& precision, long max_iters, double tol,
                           std::uint64_t seed, int threads) {
    SearchOptions opt;
    opt.ladder = parse_ladder(precision);
    opt.max_iterations = max_iters;
    opt.objective_tolerance = tol;
    opt.seed = seed;
    opt.threads = threads;
    opt.validate();
    return opt;
}

int cmd_search(const SearchConfig& cfg) {
    const EvaluationProgram prog(cfg.p, cfg.s, false);
    SearchOptions opt = make_options(cfg.precision, cfg.max_iters, cfg.tol, cfg.seed, cfg.threads);

    const auto barrier = prog.structural_barrier();
    if (!barrier.empty()) {
        std::fprintf(stderr,
                     "note: no %d-stage method of order %d exists; condition for tree %s has "
                     "constant defect -1/%" PRId64 "\n",
                     cfg.s, cfg.p, barrier.front()->tree.c_str(), barrier.front()->rhs_den);
    }

    auto batch = search_batch(cfg.count, prog, opt);
    if (cfg.promote > 0.0 && opt.ladder.size() > 1) promote_batch(batch, cfg.promote, prog, opt);

    std::filesystem::create_directories(cfg.out_dir);
    std::string summary = "# rank seed f status limbs feasibility\n";
    char line[256];
    int rank = 0;
    for (const auto& cand : batch) {
        ++rank;
        const auto tab = Tableau<PackedScalar>::from_parameters(
            cfg.s, std::span<const PackedScalar>(cand.result.x));
        char fname[64];
        std::snprintf(fname, sizeof fname, "cand-%08" PRIu64 ".rk", cand.seed);
        write_file_atomic(std::filesystem::path(cfg.out_dir) / fname,
                          write_tableau(tab, 16 * cand.result.final_limbs + 2));
        std::snprintf(line, sizeof line, "%d %" PRIu64 " %.17e %s %d %s\n", rank, cand.seed,
                      cand.result.f, to_string(cand.result.status), cand.result.final_limbs,
                      barrier.empty() ? "ok" : "infeasible(order-barrier)");
        summary += line;
    }
    write_file_atomic(std::filesystem::path(cfg.out_dir) / "summary.txt", summary);
    std::printf("%d candidates written to %s; best f = %.3e (%s)\n", cfg.count,
                cfg.out_dir.c_str(), batch.front().result.f,
                barrier.empty() ? "feasible" : "infeasible: order barrier");
    return barrier.empty() ? kExitPass : kExitFail;
}

struct CheckConfig {
    std::string file;
    int p = 4;
    std::string precision = "4";
    double tol = 1e-12;
};

template <typename S>
int check_typed(const CheckConfig& cfg) {
    const auto tab = read_tableau_file<S>(cfg.file);
    const auto rep = check_order(tab, cfg.p, cfg.tol);
    for (int n = 1; n <= cfg.p; ++n)
        std::printf("order %2d: max |defect| = %.3e\n", n,
                    rep.max_defect[static_cast<std::size_t>(n - 1)]);
    if (cfg.p + 1 <= kMaxTreeOrder)
        std::printf("sqrt(E_{%d,%d}) = %.3e\n", cfg.p, tab.s, error_norm_sqrt(tab, cfg.p));
    std::printf("b2 == 0: %s\n", rep.b2_defined ? (rep.b2_zero ? "true" : "false") : "n/a");
    std::printf("c_s == 1: %s\n", rep.cs_one ? "true" : "false");
    if (rep.structurally_infeasible)
        std::printf("note: s = %d < p = %d, so order %d is structurally unreachable\n", tab.s,
                    cfg.p, cfg.p);
    std::printf("%s (tolerance %.1e)\n", rep.pass ? "PASS" : "FAIL", cfg.tol);
    return rep.pass ? kExitPass : kExitFail;
}

int cmd_check(const CheckConfig& cfg) {
    const auto ladder = parse_ladder(cfg.precision);
    switch (ladder.back()) {
        case 1: return check_typed<double>(cfg);
        case 2: return check_typed<Expansion<2>>(cfg);
        case 3: return check_typed<Expansion<3>>(cfg);
        case 4: return check_typed<Expansion<4>>(cfg);
        case 5: return check_typed<Expansion<5>>(cfg);
        case 6: return check_typed<Expansion<6>>(cfg);
        case 7: return check_typed<Expansion<7>>(cfg);
        case 8: return check_typed<Expansion<8>>(cfg);
        default: throw CLI::ValidationError("--precision", "limb count must be in [1, 8]");
    }
}

struct RefineConfig {
    std::string file;
    std::string out;
    int p = 2;
    std::string precision = "2";
    long max_iters = 500;
    double tol = 0.0;
};

template <typename S>
int refine_typed(const RefineConfig& cfg) {
    const auto tab = read_tableau_file<S>(cfg.file);
    const EvaluationProgram prog(cfg.p, tab.s, true);
    SearchOptions opt;
    opt.objective_tolerance = cfg.tol;
    opt.refine_max_iterations = cfg.max_iters;
    const double threshold = opt.success_threshold(ScalarTraits<S>::kLimbs);

    Workspace<S> ws(prog);
    const auto params = tab.parameters();
    const double r0 = scalar_to_double(residual(prog, std::span<const S>(params), ws));
    if (!(r0 < threshold)) {
        const auto rep = check_order(tab, cfg.p, threshold);
        std::fprintf(stderr,
                     "refine: input violates the order-%d conditions (R = %.3e, worst tree %s "
                     "defect %.3e)\n",
                     cfg.p, r0, rep.worst_tree.c_str(), rep.worst_defect);
        return kExitFail;
    }

    const double e0 = scalar_to_double(error_norm(prog, std::span<const S>(params), ws));
    std::printf("start: sqrtE = %.12e, R = %.3e\n", std::sqrt(e0), r0);
    const auto outcome = refine_error<S>(std::span<const S>(params), prog, opt,
                                         [](long it, double sqrt_e, double r) {
                                             std::printf("iter %4ld: sqrtE = %.12e, R = %.3e\n",
                                                         it, sqrt_e, r);
                                         });

    const char* status = outcome.status == RefineStatus::kStationary ? "stationary"
                         : outcome.status == RefineStatus::kImproved ? "improved"
                                                                     : "restoration-failed";
    std::printf("status: %s after %ld accepted steps; sqrtE = %.12e\n", status,
                outcome.accepted_steps, std::sqrt(scalar_to_double(outcome.error_value)));
    const auto refined =
        Tableau<S>::from_parameters(tab.s, std::span<const S>(outcome.x), tab.name);
    write_file_atomic(cfg.out, write_tableau(refined, 16 * std::max(1, ScalarTraits<S>::kLimbs) + 2));
    return outcome.status == RefineStatus::kRestorationFailed ? kExitFail : kExitPass;
}

int cmd_refine(const RefineConfig& cfg) {
    const auto ladder = parse_ladder(cfg.precision);
    switch (ladder.back()) {
        case 1: return refine_typed<double>(cfg);
        case 2: return refine_typed<Expansion<2>>(cfg);
        case 4: return refine_typed<Expansion<4>>(cfg);
        case 8: return refine_typed<Expansion<8>>(cfg);
        default: throw CLI::ValidationError("--precision", "refine supports limb counts 1,2,4,8");
    }
}

struct BenchConfig {
    std::vector<std::string> methods;
    std::string problem = "fehlberg";
    int k_lo = 4;
    int k_hi = 14;
    std::string precision = "1";
    std::string out;
};

template <typename S>
int bench_typed(const BenchConfig& cfg) {
    if (cfg.problem != "fehlberg")
        throw CLI::ValidationError("--problem", "unknown problem: " + cfg.problem);
    const auto prob = fehlberg_problem<S>();
    const S t_end(5.0);

    std::vector<Tableau<S>> tabs;
    for (const std::string& m : cfg.methods) {
        if (m == "euler") tabs.push_back(euler_method<S>());
        else if (m == "heun") tabs.push_back(heun_method<S>());
        else if (m == "midpoint") tabs.push_back(midpoint_method<S>());
        else if (m == "rk4") tabs.push_back(rk4_method<S>());
        else if (m.rfind("euler-extrapolated:", 0) == 0)
            tabs.push_back(extrapolated_euler<S>(std::stoi(m.substr(19))));
        else tabs.push_back(read_tableau_file<S>(m));
    }

    std::vector<S> grid;
    for (int k = cfg.k_lo; k <= cfg.k_hi; ++k)
        grid.push_back(S(5.0) * S(std::ldexp(1.0, -k)));
    const auto records =
        work_precision(std::span<const Tableau<S>>(tabs), prob, t_end, std::span<const S>(grid));
    const std::string csv = work_precision_csv(records);
    if (cfg.out.empty())
        std::fputs(csv.c_str(), stdout);
    else
        write_file_atomic(cfg.out, csv);
    return kExitPass;
}

int cmd_bench(const BenchConfig& cfg) {
    const auto ladder = parse_ladder(cfg.precision);
    switch (ladder.back()) {
        case 1: return bench_typed<double>(cfg);
        case 2: return bench_typed<Expansion<2>>(cfg);
        case 4: return bench_typed<Expansion<4>>(cfg);
        case 8: return bench_typed<Expansion<8>>(cfg);
        default: throw CLI::ValidationError("--precision", "bench supports limb counts 1,2,4,8");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rkforge: discover, refine, and verify explicit Runge-Kutta methods"};
    app.require_subcommand(1);

    int trees_p = 10;
    auto* trees = app.add_subcommand("trees", "print the rooted-tree and condition tables");
    trees->add_option("-p,--order", trees_p, "maximum order")->check(CLI::Range(1, 16));

    SearchConfig sc;
    auto* search = app.add_subcommand("search", "run seeded BFGS searches for (p, s) methods");
    search->add_option("-p,--order", sc.p, "target order")->required();
    search->add_option("-s,--stages", sc.s, "stage count")->required();
    search->add_option("--count", sc.count, "number of seeded starts");
    search->add_option("--seed", sc.seed, "base seed; candidate i uses seed + i");
    search->add_option("--precision", sc.precision, "limb-count ladder, e.g. 1,2,4");
    search->add_option("--max-iters", sc.max_iters, "total iteration budget per candidate");
    search->add_option("--promote", sc.promote, "fraction of candidates re-run at full ladder");
    search->add_option("--tol", sc.tol, "success threshold for R (0 = per-precision default)");
    search->add_option("--threads", sc.threads, "worker threads (0 = all cores)");
    search->add_option("--out", sc.out_dir, "output directory");

    CheckConfig cc;
    auto* check = app.add_subcommand("check", "verify the order conditions of a tableau file");
    check->add_option("file", cc.file, "tableau file")->required();
    check->add_option("-p,--order", cc.p, "order to verify")->required();
    check->add_option("--precision", cc.precision, "limb count used to evaluate");
    check->add_option("--tol", cc.tol, "max |defect| allowed to pass");

    RefineConfig rc;
    auto* refine = app.add_subcommand("refine", "minimize sqrt(E) on the solution variety R = 0");
    refine->add_option("file", rc.file, "tableau file (must satisfy the order conditions)")->required();
    refine->add_option("-p,--order", rc.p, "claimed order")->required();
    refine->add_option("--out", rc.out, "output tableau file")->required();
    refine->add_option("--precision", rc.precision, "limb count used to refine");
    refine->add_option("--max-iters", rc.max_iters, "maximum accepted refinement steps");
    refine->add_option("--tol", rc.tol, "feasibility threshold for R (0 = default)");

    BenchConfig bc;
    auto* bench = app.add_subcommand("bench", "emit work-precision CSV for methods on a test problem");
    bench->add_option("methods", bc.methods,
                      "builtin names (euler, heun, midpoint, rk4, euler-extrapolated:p) or files")
        ->required();
    bench->add_option("--problem", bc.problem, "problem selector");
    bench->add_option("--h-grid", [&bc](const std::vector<std::string>& vals) {
        const auto& v = vals.front();
        const auto colon = v.find(':');
        if (colon == std::string::npos) return false;
        bc.k_lo = std::stoi(v.substr(0, colon));
        bc.k_hi = std::stoi(v.substr(colon + 1));
        return bc.k_lo <= bc.k_hi;
    }, "step grid lo:hi meaning h = 5/2^k for k in [lo, hi] (default 4:14)");
    bench->add_option("--precision", bc.precision, "limb count for state arithmetic");
    bench->add_option("--out", bc.out, "CSV output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*trees) return cmd_trees(trees_p);
        if (*search) return cmd_search(sc);
        if (*check) return cmd_check(cc);
        if (*refine) return cmd_refine(rc);
        if (*bench) return cmd_bench(bc);
    } catch (const IoError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return kExitIo;
    } catch (const TableauFormatError& e) {
        std::fprintf(stderr, "tableau error: %s\n", e.what());
        return kExitFail;
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFail;
    }
    return kExitUsage;
}
