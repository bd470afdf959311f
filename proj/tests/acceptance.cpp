// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <queue>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "cli.hpp"
#include "contagion/bounds.hpp"
#include "contagion/coupling.hpp"
#include "contagion/experiment.hpp"
#include "contagion/io.hpp"
#include "contagion/parallel.hpp"
#include "contagion/percolation.hpp"
#include "support.hpp"

using namespace contagion;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20170501;
constexpr double kInf = std::numeric_limits<double>::infinity();

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
    std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(double v) { return format_double(v); }

SearchConfig protocol_search(unsigned sims) {
    SearchConfig s;
    s.dim = 2;
    s.side = 30;
    s.k = 1;
    s.max_events = 100000;
    s.sims_per_block = sims;
    s.lambda_init = 1.5;
    s.lambda_step = 0.01;
    s.threads = worker_count();
    s.master_seed = kSeed;
    return s;
}

double lambda_c_inf_search() {
    const LambdaSearch s30 = estimate_lambda_c_inf(protocol_search(30));
    report(s30.resolved && s30.lambda_c_inf_hat >= 0.71 && s30.lambda_c_inf_hat <= 1.01, "lambda_c_inf_S30",
           "lambda_c_inf_hat = " + fmt(s30.lambda_c_inf_hat) + ", required [0.71, 1.01]");
    const LambdaSearch s20 = estimate_lambda_c_inf(protocol_search(20));
    report(s20.resolved && s20.lambda_c_inf_hat >= 0.62 && s20.lambda_c_inf_hat <= 0.92, "lambda_c_inf_S20",
           "lambda_c_inf_hat = " + fmt(s20.lambda_c_inf_hat) + ", required [0.62, 0.92]");
    return s30.lambda_c_inf_hat;
}

void phase_boundary_shape(double lambda_hat) {
    if (!std::isfinite(lambda_hat)) {
        report(false, "phase_boundary_trend", "no lambda_c_inf estimate to sweep from");
        return;
    }
    std::vector<double> grid;
    for (double offset : {0.2, 0.5, 0.8, 1.2, 1.7, 2.2, 3.2}) grid.push_back(lambda_hat + offset);
    const PhaseBoundaryEstimate est = estimate_gamma_c(grid, protocol_search(30), lambda_hat);
    std::vector<double> xs, ys;
    bool all_resolved = true;
    std::string points;
    for (const GammaPoint& p : est.points) {
        all_resolved = all_resolved && p.resolved && !p.degenerate && std::isfinite(p.gamma_c_hat) && p.gamma_c_hat > 0;
        xs.push_back(p.lambda);
        ys.push_back(p.gamma_c_hat);
        points += " (" + fmt(p.lambda) + ", " + fmt(p.gamma_c_hat) + ")";
    }
    const double rho = spearman(xs, ys);
    report(all_resolved && xs.size() >= 5 && rho <= -0.7, "phase_boundary_trend",
           "spearman = " + fmt(rho) + " (required <= -0.7), points:" + points);
}

void coupling_domination() {
    Rng rng(derive_seed(kSeed, {0x636f75706cULL}));
    std::vector<CoupledConfig> configs;
    for (int i = 0; i < 100; ++i) {
        CoupledConfig c;
        const int k = 1 + static_cast<int>(rng.below(2));
        const int dim = 1 + static_cast<int>(rng.below(2));
        const int side = 2 * k + 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(12 - (2 * k + 2) + 1)));
        c.base.lattice = TorusLattice(dim, side);
        c.base.k = k;
        c.base.norm = rng.bernoulli(0.5) ? Norm::L1 : Norm::Linf;
        c.base.lambda = std::exp(rng.uniform() * 3.0 - 1.5);
        c.base.gamma = std::exp(rng.uniform() * 3.0 - 1.5);
        c.base.load = rng.bernoulli(0.5) ? LoadDistribution::point_mass(1) : LoadDistribution::parse("0:0.3,1:0.4,2:0.3");
        c.base.mode = rng.bernoulli(0.8) ? TransmissionMode::standard : TransmissionMode::site_only;
        c.base.max_events = 10000;
        c.kind = i % 2 == 0 ? PairKind::gamma_pair : PairKind::lambda_pair;
        c.lax_rate = std::exp(rng.uniform() * 3.0 - 1.0);
        c.strict_rate = c.lax_rate * (0.05 + 0.95 * rng.uniform());
        c.shared_seed = rng();
        configs.push_back(c);
    }
    std::vector<DominationReport> reports(configs.size());
    parallel_for(configs.size(), worker_count(), [&](std::size_t i) { reports[i] = coupled_run(configs[i]); });
    int held = 0;
    std::uint64_t events = 0;
    for (const auto& r : reports) {
        held += r.domination_held ? 1 : 0;
        events += r.events_checked;
    }
    report(held == 100, "coupling_domination",
           std::to_string(held) + "/100 configurations dominated after every event (" + std::to_string(events) +
               " events checked)");
}

void engine_invariants() {
    constexpr std::uint64_t target = 10'000'000;
    constexpr std::uint64_t per_config = 50'000;
    std::uint64_t events = 0, configs = 0, violations = 0;
    std::string first;
    Rng meta(derive_seed(kSeed, {0x696e76ULL}));
    while (events < target) {
        const std::size_t batch = 16;
        std::vector<EngineConfig> cfgs;
        for (std::size_t i = 0; i < batch; ++i) cfgs.push_back(support::random_config(meta, 2, 8, 2));
        std::vector<std::uint64_t> counts(batch, 0), bad(batch, 0);
        std::vector<std::string> messages(batch);
        parallel_for(batch, worker_count(), [&](std::size_t i) {
            const EngineConfig& c = cfgs[i];
            WorldState w = init_world(c);
            const std::size_t n0 = w.particle_count();
            auto before = support::Snapshot::of(w);
            if (n0 == 0) return;
            // Stepping continues past extinction so that absorption is audited too.
            for (std::uint64_t e = 0; e < per_config; ++e) {
                const EventRecord rec = step(w, c);
                auto after = support::Snapshot::of(w);
                auto problems = support::check_transition(before, after, rec, c);
                if (w.particle_count() != n0) problems.push_back("particle count changed");
                if (e % 64 == 63) {
                    const auto more = audit(w, c);
                    problems.insert(problems.end(), more.begin(), more.end());
                }
                if (!problems.empty()) {
                    bad[i] += problems.size();
                    if (messages[i].empty()) messages[i] = problems.front();
                }
                before = std::move(after);
                ++counts[i];
            }
            bad[i] += audit(w, c).size();
        });
        for (std::size_t i = 0; i < batch; ++i) {
            events += counts[i];
            violations += bad[i];
            if (first.empty() && !messages[i].empty()) first = messages[i];
        }
        configs += batch;
    }
    report(violations == 0, "engine_invariants",
           std::to_string(violations) + " violations over " + std::to_string(events) + " audited events in " +
               std::to_string(configs) + " random configurations" + (first.empty() ? "" : ", first: " + first));
}

void bounds_oracle() {
    std::mt19937_64 gen(kSeed);
    std::uniform_int_distribution<int> dist_d(1, 3), dist_k(1, 2), dist_m(1, 2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int within = 0;
    std::string worst;
    double worst_z = 0;
    for (int i = 0; i < 10; ++i) {
        const int d = dist_d(gen), k = dist_k(gen);
        const auto m = static_cast<unsigned>(dist_m(gen));
        BoundParameters p{d, k, m, 1.0, 1.0};
        const BoundResult shape = offspring_bound(p);
        // Pick lambda so that p_part_star lands in [0.05, 0.9].
        const double target = 0.05 + 0.85 * unit(gen);
        const double root = std::pow(target, 1.0 / shape.load);
        p.lambda = shape.signal_hazard * root / (1.0 - root);
        const double exact = p_part_star(p);
        std::gamma_distribution<double> g(shape.load, 1.0 / p.lambda);
        std::exponential_distribution<double> e(shape.signal_hazard);
        constexpr int samples = 1'000'000;
        int hits = 0;
        for (int s = 0; s < samples; ++s) hits += g(gen) < e(gen) ? 1 : 0;
        const double est = static_cast<double>(hits) / samples;
        const double se = std::sqrt(exact * (1 - exact) / samples);
        const double z = std::abs(est - exact) / se;
        if (z <= 3.0) ++within;
        if (z > worst_z) {
            worst_z = z;
            worst = "d=" + std::to_string(d) + " k=" + std::to_string(k) + " m=" + std::to_string(m) +
                    " lambda=" + fmt(p.lambda);
        }
    }
    report(within == 10, "bounds_p_part_star_mc",
           std::to_string(within) + "/10 points within 3 SE (1e6 samples each), max |z| = " + fmt(worst_z) + " at " +
               worst);

    bool decreasing = true;
    for (int d = 1; d <= 3; ++d) {
        for (int k = 1; k <= 2; ++k) {
            for (unsigned m = 1; m <= 2; ++m) {
                double prev = kInf;
                for (double lambda = 0.1; lambda <= 1e5; lambda *= 1.25) {
                    const double b = offspring_bound({d, k, m, lambda, 1.0}).offspring_bound;
                    decreasing = decreasing && b < prev;
                    prev = b;
                }
                prev = kInf;
                for (double gamma = 1e-4; gamma <= 1e4; gamma *= 1.25) {
                    const double b = offspring_bound({d, k, m, 100.0, gamma}).offspring_bound;
                    decreasing = decreasing && b < prev;
                    prev = b;
                }
                decreasing = decreasing && offspring_bound({d, k, m, 100.0, kInf}).offspring_bound < prev;
            }
        }
    }
    report(decreasing, "bounds_monotone", "offspring_bound strictly decreasing along lambda and gamma grids");

    int bracketed = 0;
    constexpr double tol = 1e-6;
    for (int i = 0; i < 20; ++i) {
        const double gamma = i % 5 == 4 ? kInf : std::pow(10.0, -3.0 + 6.0 * unit(gen));
        const int d = dist_d(gen), k = dist_k(gen);
        const auto m = static_cast<unsigned>(dist_m(gen));
        const LambdaStar s = subcritical_lambda(gamma, d, k, m, tol);
        const double below = std::max(s.lambda_star - tol, 1e-300);
        const bool ok = offspring_bound({d, k, m, s.lambda_star, gamma}).offspring_bound < 1.0 &&
                        offspring_bound({d, k, m, below, gamma}).offspring_bound >= 1.0;
        bracketed += ok ? 1 : 0;
    }
    report(bracketed == 20, "bounds_subcritical_lambda",
           std::to_string(bracketed) + "/20 random (gamma, d, k, m_bar) satisfy bound(l*) < 1 <= bound(l* - tol)");
}

void local_process_domination() {
    struct Point {
        int d, k;
        unsigned m;
        double lambda, gamma;
    };
    const std::vector<Point> pts{{1, 1, 1, 1e4, 1},   {1, 1, 1, 20, 1},   {1, 1, 1, 20, 100}, {1, 1, 1, 20, kInf},
                                 {2, 1, 1, 50, 5},    {2, 1, 1, 50, kInf}, {1, 2, 2, 100, 10}, {2, 1, 2, 100, 1},
                                 {1, 1, 1, 1e3, 0.01}};
    int ok = 0;
    std::string detail;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point& q = pts[i];
        const BoundParameters p{q.d, q.k, q.m, q.lambda, q.gamma};
        const OffspringEstimate e = maximal_load_offspring_mc(p, 100000, derive_seed(kSeed, {0x6d63ULL, i}), worker_count());
        const double bound = offspring_bound(p).offspring_bound;
        const bool pass = e.truncated_trials == 0 && e.mean <= bound + 3 * e.std_error;
        ok += pass ? 1 : 0;
        detail += " [d=" + std::to_string(q.d) + " k=" + std::to_string(q.k) + " m=" + std::to_string(q.m) +
                  " l=" + fmt(q.lambda) + " g=" + fmt(q.gamma) + ": " + fmt(e.mean) + " <= " + fmt(bound) + "]";
    }
    report(ok == static_cast<int>(pts.size()), "local_process_domination",
           std::to_string(ok) + "/" + std::to_string(pts.size()) + " points with mean <= bound + 3 SE (1e5 trials):" +
               detail);
}

// Component ids by breadth-first search, -1 for closed sites.
std::vector<int> bfs_components(int n, const std::vector<std::uint8_t>& open, Adjacency adj) {
    std::vector<int> comp(open.size(), -1);
    int next = 0;
    std::queue<int> q;
    for (std::size_t s = 0; s < open.size(); ++s) {
        if (!open[s] || comp[s] >= 0) continue;
        comp[s] = next;
        q.push(static_cast<int>(s));
        while (!q.empty()) {
            const int cur = q.front();
            q.pop();
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if ((dx == 0 && dy == 0) || (adj == Adjacency::four && dx != 0 && dy != 0)) continue;
                    const int nx = cur % n + dx, ny = cur / n + dy;
                    if (nx < 0 || ny < 0 || nx >= n || ny >= n) continue;
                    const auto j = static_cast<std::size_t>(ny * n + nx);
                    if (open[j] && comp[j] < 0) {
                        comp[j] = next;
                        q.push(static_cast<int>(j));
                    }
                }
            }
        }
        ++next;
    }
    return comp;
}

void percolation_oracle() {
    std::uint64_t grids = 0, mismatches = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(derive_seed(kSeed, {0x626673ULL, seed}));
        for (int n = 2; n <= 32; ++n) {
            for (Adjacency adj : {Adjacency::four, Adjacency::eight}) {
                const double p = 0.3 + 0.5 * rng.uniform();
                std::vector<double> u(static_cast<std::size_t>(n * n));
                for (double& v : u) v = rng.uniform();
                std::vector<std::uint8_t> open(u.size());
                for (std::size_t i = 0; i < u.size(); ++i) open[i] = u[i] < p ? 1 : 0;
                const auto labels = label_clusters(n, open, adj);
                const auto comp = bfs_components(n, open, adj);
                std::unordered_map<int, std::uint32_t> label_of;
                std::unordered_map<std::uint32_t, int> comp_of;
                bool same = true;
                for (std::size_t i = 0; i < open.size(); ++i) {
                    const bool closed = labels[i] == std::numeric_limits<std::uint32_t>::max();
                    if (closed != (comp[i] < 0)) same = false;
                    if (comp[i] < 0 || closed) continue;
                    const auto [li, fresh_l] = label_of.emplace(comp[i], labels[i]);
                    const auto [ci, fresh_c] = comp_of.emplace(labels[i], comp[i]);
                    if (li->second != labels[i] || ci->second != comp[i]) same = false;
                }
                // Spanning by the oracle: a component present in both boundary columns.
                std::vector<std::uint8_t> left(open.size(), 0);
                bool spans = false;
                for (int y = 0; y < n; ++y) {
                    const int c = comp[static_cast<std::size_t>(y * n)];
                    if (c >= 0) left[static_cast<std::size_t>(c)] = 1;
                }
                for (int y = 0; y < n; ++y) {
                    const int c = comp[static_cast<std::size_t>(y * n + n - 1)];
                    if (c >= 0 && left[static_cast<std::size_t>(c)]) spans = true;
                }
                if (percolate_uniforms(n, p, adj, u).spanning != spans) same = false;
                ++grids;
                mismatches += same ? 0 : 1;
            }
        }
    }
    report(mismatches == 0, "percolation_bfs_agreement",
           std::to_string(mismatches) + " mismatches over " + std::to_string(grids) +
               " grids (n = 2..32, both adjacencies, 100 seeds)");

    std::vector<double> ps;
    for (int i = 0; i <= 20; ++i) ps.push_back(0.55 + 0.005 * i);
    const auto sweep = spanning_sweep(128, Adjacency::four, ps, 2000, derive_seed(kSeed, {0x737765ULL}), worker_count());
    const double cross = crossing_point(sweep);
    report(std::abs(cross - 0.593) <= 0.02, "percolation_crossing",
           "four-neighbor crossing at n = 128 (2000 realizations per p) = " + fmt(cross) + ", required 0.593 +- 0.02");
}

void supercriticality() {
    std::string detail;
    bool found = false;
    for (int j = 2; j <= 8; ++j) {
        RegionTrialConfig r;
        r.k = 1;
        r.lambda = 1.0;
        r.gamma = std::pow(10.0, -0.5 * j);
        r.seed = derive_seed(kSeed, {key_of(r.gamma)});
        const SupercriticalityVerdict v = supercriticality_check(r, 1.0, 10000, 128, Adjacency::four, 2000, worker_count());
        detail += " [g=" + fmt(r.gamma) + " p_open=" + fmt(v.openness.p_open) + "+-" + fmt(v.p_open_ci) +
                  " p_c=" + fmt(v.threshold.p_c) + "+-" + fmt(v.threshold.ci_halfwidth) + " " +
                  std::string(to_string(v.verdict)) + "]";
        if (v.verdict == Verdict::supercritical_evidence) {
            found = true;
            break;
        }
    }
    report(found, "supercriticality_mechanism",
           "lambda = 1, k = 1, P(M>=1) = 1, gamma grid 10^(-j/2) down to 1e-4:" + detail);
}

std::map<std::string, std::string> outputs_of(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name != "manifest.json") files[name] = read_text_file(entry.path());
    }
    return files;
}

void determinism() {
    const std::vector<std::vector<std::string>> runs = {
        {"simulate", "--side=16", "--lambda=0.7", "--gamma=1.5", "--max-events=50000"},
        {"sweep", "--side=10", "--lambda=1.5", "--gamma=2", "--replicas=40", "--t-max=20", "--t-points=41"},
        {"phase", "--side=12", "--max-events=5000", "--sims=5", "--lambda-init=1.2", "--lambda-step=0.05",
         "--lambdas=1.5,2,3", "--gamma-init=5", "--gamma-factor=0.7"},
        {"couple", "--side=10", "--max-events=10000", "--runs=8", "--kind=lambda", "--strict=0.5", "--lax=1.5"},
        {"bounds", "--mc-trials=2000"},
        {"perc", "--trials=1000", "--gammas=0.01,0.001", "--n=48", "--realizations=100"},
    };
    const fs::path root = fs::temp_directory_path() / "contagion_acceptance_determinism";
    int identical = 0;
    std::string differing;
    for (const auto& args : runs) {
        bool same = true;
        std::map<std::string, std::string> reference;
        int index = 0;
        for (const char* threads : {"1", "1", "4"}) {
            for (const char* format : {"csv"}) {
                const fs::path dir = root / (args[0] + "_" + std::to_string(index++));
                fs::remove_all(dir);
                std::vector<std::string> a = args;
                a.push_back("--seed=" + std::to_string(kSeed));
                a.push_back(std::string("--threads=") + threads);
                a.push_back(std::string("--format=") + format);
                a.push_back("--out-dir=" + dir.string());
                const int code = cli::run(a);
                if (code != cli::ok) same = false;
                const auto files = outputs_of(dir);
                if (reference.empty()) {
                    reference = files;
                } else if (files != reference) {
                    same = false;
                }
            }
        }
        identical += same ? 1 : 0;
        if (!same) differing += " " + args[0];
    }
    fs::remove_all(root);
    report(identical == static_cast<int>(runs.size()), "determinism",
           std::to_string(identical) + "/" + std::to_string(runs.size()) +
               " subcommands byte-identical across two runs and thread counts 1 and 4" +
               (differing.empty() ? "" : "; differing:" + differing));
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    phase_boundary_shape(lambda_c_inf_search());
    coupling_domination();
    engine_invariants();
    bounds_oracle();
    local_process_domination();
    percolation_oracle();
    supercriticality();
    determinism();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("acceptance: %d failing criteria, %.1f s\n", failures, secs);
    return failures == 0 ? 0 : 1;
}
