#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

#include "CLI11.hpp"

#include "contagion/bounds.hpp"
#include "contagion/coupling.hpp"
#include "contagion/engine.hpp"
#include "contagion/experiment.hpp"
#include "contagion/io.hpp"
#include "contagion/parallel.hpp"
#include "contagion/percolation.hpp"

namespace contagion::cli {

namespace {

using nlohmann::json;

const std::vector<std::string> kCommands = {"simulate", "sweep", "phase", "couple", "bounds", "perc"};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string normalize_key(std::string key) {
    for (char& c : key) {
        c = c == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    return key;
}

std::string show(const std::string& v) { return v; }
std::string show(double v) { return format_double(v); }
std::string show(bool v) { return v ? "true" : "false"; }
template <typename T>
    requires std::is_integral_v<T>
std::string show(T v) {
    return std::to_string(v);
}
std::string show(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

// Registers options and remembers how to print their effective values for the manifest.
class OptionSet {
public:
    explicit OptionSet(CLI::App* app) : app_(app) {}

    template <typename T>
    CLI::Option* add(const std::string& name, T& var, const std::string& help) {
        CLI::Option* opt = app_->add_option("--" + name, var, help)->capture_default_str();
        if constexpr (std::is_same_v<T, std::vector<double>>) opt->delimiter(',');
        fields_.emplace_back(name, [&var] { return show(var); });
        return opt;
    }

    CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
        CLI::Option* opt = app_->add_flag("--" + name, var, help);
        fields_.emplace_back(name, [&var] { return show(var); });
        return opt;
    }

    [[nodiscard]] std::map<std::string, std::string> values() const {
        std::map<std::string, std::string> out;
        for (const auto& [name, get] : fields_) out[name] = get();
        return out;
    }

private:
    CLI::App* app_;
    std::vector<std::pair<std::string, std::function<std::string()>>> fields_;
};

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    unsigned threads = 1;
    std::string format = "csv";
};

struct EngineOptions {
    int dim = 2;
    int side = 30;
    int k = 1;
    std::string norm = "l1";
    double lambda = 1.0;
    double gamma = kInfinity;
    std::string load = "1";
    std::string mode = "standard";
    std::uint64_t max_events = 100000;
    std::size_t trajectory_points = 4096;
    bool count_sites_as_survival = false;
    bool infect_origin_site = true;
    double time_horizon = kInfinity;

    void add(OptionSet& o, bool rates = true) {
        o.add("dim", dim, "lattice dimension d");
        o.add("side", side, "torus side L");
        o.add("k", k, "region radius");
        o.add("norm", norm, "region norm: l1 or linf");
        if (rates) {
            o.add("lambda", lambda, "recovery rate");
            o.add("gamma", gamma, "clearance rate (inf disables contamination)");
        }
        o.add("load", load, "particles per site: a count or a pmf such as 0:0.5,1:0.5");
        o.add("mode", mode, "transmission mode: standard or site_only");
        o.add("max-events", max_events, "event budget K");
        o.add("trajectory-points", trajectory_points, "maximum recorded trajectory points");
        o.flag("count-sites-as-survival", count_sites_as_survival, "contaminated sites alone count as survival");
        o.flag("infect-origin-site", infect_origin_site, "contaminate the origin site at time 0");
        o.add("time-horizon", time_horizon, "stop once simulated time reaches this");
    }

    [[nodiscard]] EngineConfig build(std::uint64_t seed) const {
        EngineConfig c;
        c.lattice = TorusLattice(dim, side);
        c.k = k;
        c.norm = parse_norm(norm);
        c.lambda = lambda;
        c.gamma = gamma;
        c.load = LoadDistribution::parse(load);
        c.mode = parse_mode(mode);
        c.max_events = max_events;
        c.seed = seed;
        c.trajectory_points = trajectory_points;
        c.count_sites_as_survival = count_sites_as_survival;
        c.infect_origin_site = infect_origin_site;
        c.time_horizon = time_horizon;
        c.validate();
        return c;
    }
};

struct Context {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    bool json_output = false;
};

struct Outcome {
    std::vector<std::pair<std::string, std::string>> files;
    std::uint64_t events = 0;
    int code = ExitCode::ok;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

struct SimulateCmd {
    EngineOptions engine;

    void add(OptionSet& o) { engine.add(o); }

    Outcome operator()(const Context& ctx) const {
        EngineConfig cfg = engine.build(ctx.seed);
        cfg.record_trajectory = true;
        const RunResult r = run(cfg);
        Outcome out;
        out.events = r.events_executed;
        if (ctx.json_output) {
            out.files.emplace_back("result.json", dump(to_json(r)));
        } else {
            out.files.emplace_back("trajectory.csv", trajectory_table(r.trajectory).str());
        }
        return out;
    }
};

struct SweepCmd {
    EngineOptions engine;
    std::size_t replicas = 100;
    double t_max = 100.0;
    std::size_t t_points = 101;

    void add(OptionSet& o) {
        engine.side = 10;
        engine.add(o);
        o.add("replicas", replicas, "independent runs");
        o.add("t-max", t_max, "last grid time");
        o.add("t-points", t_points, "number of evenly spaced grid times from 0 to t-max");
    }

    Outcome operator()(const Context& ctx) const {
        const EngineConfig cfg = engine.build(ctx.seed);
        if (replicas < 1) throw ConfigError("replicas must be >= 1");
        if (t_points < 2 || !(t_max > 0) || !std::isfinite(t_max)) {
            throw ConfigError("need t-points >= 2 and a positive finite t-max");
        }
        std::vector<double> grid(t_points);
        for (std::size_t i = 0; i < t_points; ++i) {
            grid[i] = t_max * static_cast<double>(i) / static_cast<double>(t_points - 1);
        }
        Outcome out;
        const auto curve = survival_curve(cfg, grid, replicas, ctx.threads, &out.events);
        if (ctx.json_output) {
            json j = json::array();
            for (const auto& p : curve) j.push_back({{"t", p.t}, {"survival_fraction", p.survival_fraction}});
            out.files.emplace_back("survival.json", dump(j));
        } else {
            out.files.emplace_back("survival.csv", survival_table(curve).str());
        }
        return out;
    }
};

struct PhaseCmd {
    SearchConfig search;
    std::string load = "1";
    std::string mode = "standard";
    double lambda_c = std::numeric_limits<double>::quiet_NaN();

    void add(OptionSet& o) {
        o.add("dim", search.dim, "lattice dimension d");
        o.add("side", search.side, "torus side L");
        o.add("k", search.k, "region radius");
        o.add("max-events", search.max_events, "events per run K");
        o.add("sims", search.sims_per_block, "runs per block S");
        o.add("load", load, "particles per site");
        o.add("mode", mode, "transmission mode");
        o.add("lambda-init", search.lambda_init, "first lambda of the search");
        o.add("lambda-step", search.lambda_step, "lambda decrement");
        o.add("refine", search.refine_iterations, "bisection steps after the fixed-step search");
        o.add("gamma-init", search.gamma_init, "first gamma of each boundary sweep");
        o.add("gamma-factor", search.gamma_factor, "geometric gamma decrement factor");
        o.add("gamma-floor", search.gamma_floor, "smallest gamma tried");
        o.add("lambdas", search.lambda_grid, "lambda values for the boundary sweep");
        o.add("lambda-c", lambda_c, "known lambda_c estimate; skips the gamma = inf search");
    }

    Outcome operator()(const Context& ctx) const {
        SearchConfig s = search;
        s.load = LoadDistribution::parse(load);
        s.mode = parse_mode(mode);
        s.threads = ctx.threads;
        s.master_seed = ctx.seed;
        s.validate();

        Outcome out;
        json doc;
        double lambda_hat = lambda_c;
        if (std::isnan(lambda_c)) {
            const LambdaSearch ls = estimate_lambda_c_inf(s);
            out.events += ls.events;
            lambda_hat = ls.lambda_c_inf_hat;
            if (!ls.resolved) out.code = ExitCode::unresolved;
            if (ctx.json_output) {
                doc["lambda_search"] = to_json(ls);
            } else {
                out.files.emplace_back("lambda_search.csv", lambda_search_table(ls).str());
            }
        }
        if (!s.lambda_grid.empty()) {
            const PhaseBoundaryEstimate pb = estimate_gamma_c(s.lambda_grid, s, lambda_hat);
            out.events += pb.events;
            for (const auto& p : pb.points) {
                if (!p.resolved) out.code = ExitCode::unresolved;
            }
            if (ctx.json_output) {
                doc["phase_boundary"] = to_json(pb);
            } else {
                out.files.emplace_back("phase_boundary.csv", phase_boundary_table(pb).str());
            }
        }
        if (ctx.json_output) {
            doc["lambda_c_inf_hat"] = json_number(lambda_hat);
            out.files.emplace_back("phase.json", dump(doc));
        }
        return out;
    }
};

struct CoupleCmd {
    EngineOptions engine;
    std::string kind = "gamma";
    double strict_rate = 0.5;
    double lax_rate = 1.0;
    std::size_t runs = 1;
    std::uint64_t check_interval = 1;

    void add(OptionSet& o) {
        engine.side = 12;
        engine.max_events = 10000;
        engine.gamma = 1.0;
        engine.add(o);
        o.add("kind", kind, "coupled rate: gamma or lambda");
        o.add("strict", strict_rate, "smaller rate (the process with more infection)");
        o.add("lax", lax_rate, "larger rate");
        o.add("runs", runs, "independent coupled runs");
        o.add("check-interval", check_interval, "events between domination checks");
    }

    Outcome operator()(const Context& ctx) const {
        CoupledConfig base;
        base.base = engine.build(ctx.seed);
        if (kind == "gamma") {
            base.kind = PairKind::gamma_pair;
        } else if (kind == "lambda") {
            base.kind = PairKind::lambda_pair;
        } else {
            throw ConfigError("unknown coupling kind '" + kind + "'");
        }
        base.strict_rate = strict_rate;
        base.lax_rate = lax_rate;
        base.check_interval = check_interval;
        base.validate();
        if (runs < 1) throw ConfigError("runs must be >= 1");

        std::vector<DominationReport> reports(runs);
        parallel_for(runs, ctx.threads, [&](std::size_t r) {
            CoupledConfig c = base;
            c.shared_seed = derive_seed(ctx.seed, {r});
            reports[r] = coupled_run(c);
        });

        Outcome out;
        for (const auto& r : reports) out.events += r.events_executed;
        if (ctx.json_output) {
            json j = json::array();
            for (std::size_t r = 0; r < runs; ++r) {
                json item = to_json(reports[r]);
                item["run"] = r;
                j.push_back(std::move(item));
            }
            out.files.emplace_back("domination.json", dump(j));
        } else {
            CsvTable t({"run", "events_checked", "domination_held", "first_violation", "survived_strict",
                        "survived_lax"});
            for (std::size_t r = 0; r < runs; ++r) {
                const auto& rep = reports[r];
                t.add_row({std::to_string(r), std::to_string(rep.events_checked), csv_bool(rep.domination_held),
                           rep.first_violation ? std::to_string(*rep.first_violation) : "",
                           csv_bool(rep.survived_strict), csv_bool(rep.survived_lax)});
            }
            out.files.emplace_back("domination.csv", t.str());
        }
        return out;
    }
};

struct BoundsCmd {
    int d = 2;
    int k = 1;
    unsigned m_bar = 1;
    std::vector<double> lambdas{1, 2, 5, 10, 20, 50, 100};
    std::vector<double> gammas{1, kInfinity};
    double tol = 1e-6;
    std::uint64_t mc_trials = 0;

    void add(OptionSet& o) {
        o.add("d", d, "dimension");
        o.add("k", k, "region radius");
        o.add("m-bar", m_bar, "cap on particles per site");
        o.add("lambdas", lambdas, "lambda grid");
        o.add("gammas", gammas, "gamma grid (inf allowed)");
        o.add("tol", tol, "tolerance of the lambda* bisection");
        o.add("mc-trials", mc_trials, "local-process Monte Carlo trials per point (0 skips)");
    }

    Outcome operator()(const Context& ctx) const {
        std::vector<BoundRow> rows;
        json points = json::array();
        for (double g : gammas) {
            for (double l : lambdas) {
                const BoundParameters p{d, k, m_bar, l, g};
                try {
                    rows.push_back({p, offspring_bound(p)});
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(e.what());
                }
                json item = {{"params", to_json(p)}, {"result", to_json(rows.back().result)}};
                if (mc_trials > 0) {
                    const auto est =
                        maximal_load_offspring_mc(p, mc_trials, derive_seed(ctx.seed, {key_of(l), key_of(g)}),
                                                  ctx.threads);
                    item["monte_carlo"] = to_json(est);
                }
                points.push_back(std::move(item));
            }
        }
        Outcome out;
        if (ctx.json_output) {
            json stars = json::array();
            for (double g : gammas) {
                LambdaStar s;
                try {
                    s = subcritical_lambda(g, d, k, m_bar, tol);
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(e.what());
                }
                stars.push_back({{"gamma", json_number(g)},
                                 {"lambda_star", json_number(s.lambda_star)},
                                 {"bound_at_star", json_number(s.bound_at_star)},
                                 {"iterations", s.iterations}});
            }
            out.files.emplace_back("bounds.json", dump({{"points", points}, {"lambda_star", stars}}));
        } else {
            out.files.emplace_back("bounds.csv", bounds_table(rows).str());
        }
        return out;
    }
};

struct PercCmd {
    std::vector<double> lambdas{1.0};
    std::vector<double> gammas{1e-2};
    int k = 1;
    std::uint64_t trials = 10000;
    double p_m_ge_1 = 1.0;
    std::string start = "at_farthest_corner";
    std::string coverage = "cumulative";
    double max_sim_time = 0;
    int n = 128;
    std::string adjacency = "four";
    std::vector<double> p_values{0.55, 0.56, 0.57, 0.58, 0.59, 0.6, 0.61, 0.62, 0.63, 0.64, 0.65};
    std::uint64_t realizations = 200;

    void add(OptionSet& o) {
        o.add("lambdas", lambdas, "recovery rates of the region trials");
        o.add("gammas", gammas, "clearance rates of the activating corner");
        o.add("k", k, "region radius");
        o.add("trials", trials, "region trials per (lambda, gamma)");
        o.add("p-m-ge-1", p_m_ge_1, "P(M >= 1)");
        o.add("start", start, "start policy: at_center, at_farthest_corner or uniform");
        o.add("coverage", coverage, "corner coverage: cumulative or single_excursion");
        o.add("max-sim-time", max_sim_time, "per-trial time safeguard (0 means 1e4/gamma)");
        o.add("n", n, "percolation grid side");
        o.add("adjacency", adjacency, "percolation adjacency: four or eight");
        o.add("p-values", p_values, "site probabilities of the spanning sweep");
        o.add("realizations", realizations, "grid realizations per p and for the threshold");
    }

    Outcome operator()(const Context& ctx) const {
        const Adjacency adj = parse_adjacency(adjacency);
        RegionTrialConfig base;
        base.k = k;
        base.start = parse_start_policy(start);
        base.coverage = parse_coverage(coverage);
        base.max_sim_time = max_sim_time;
        if (realizations < 1) throw ConfigError("realizations must be >= 1");
        for (double p : p_values) {
            if (!(p >= 0 && p <= 1)) throw ConfigError("p-values must lie in [0,1]");
        }

        Outcome out;
        std::vector<OpennessRow> rows;
        for (double l : lambdas) {
            for (double g : gammas) {
                RegionTrialConfig cfg = base;
                cfg.lambda = l;
                cfg.gamma = g;
                cfg.seed = derive_seed(ctx.seed, {key_of(l), key_of(g)});
                cfg.validate();
                rows.push_back({l, g, k, estimate_openness(cfg, trials, p_m_ge_1, ctx.threads)});
                out.events += rows.back().estimate.jumps;
            }
        }
        const std::uint64_t grid_seed = derive_seed(ctx.seed, {0x70657263ULL});
        const auto sweep = spanning_sweep(n, adj, p_values, realizations, grid_seed, ctx.threads);

        if (ctx.json_output) {
            const ThresholdEstimate threshold = estimate_threshold(n, adj, realizations, grid_seed, ctx.threads);
            json openness = json::array();
            for (const auto& r : rows) {
                json item = to_json(judge(r.estimate, threshold));
                item["lambda"] = json_number(r.lambda);
                item["gamma"] = json_number(r.gamma);
                item["k"] = r.k;
                openness.push_back(std::move(item));
            }
            json spans = json::array();
            for (const auto& s : sweep) spans.push_back({{"p", s.p}, {"spanning_fraction", s.spanning_fraction}});
            out.files.emplace_back("perc.json", dump({{"n", n},
                                                       {"adjacency", std::string(to_string(adj))},
                                                       {"threshold", to_json(threshold)},
                                                       {"crossing", json_number(crossing_point(sweep))},
                                                       {"sweep", spans},
                                                       {"regions", openness}}));
        } else {
            out.files.emplace_back("openness.csv", openness_table(rows).str());
            out.files.emplace_back("percolation.csv", percolation_table(n, adj, sweep).str());
        }
        return out;
    }
};

std::optional<std::uint64_t> seed_from_env() {
    const char* env = std::getenv("CONTAGION_SEED");
    if (!env || !*env) return std::nullopt;
    const std::string text = trim(env);
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ConfigError("CONTAGION_SEED is not an unsigned 64-bit integer: '" + text + "'");
    }
    return v;
}

bool has_flag(const std::vector<std::string>& args, const std::string& key) {
    const std::string flag = "--" + key;
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
        return a == flag || a.rfind(flag + "=", 0) == 0;
    });
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        std::string key = normalize_key(trim(std::string_view(body).substr(0, eq)));
        std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> load_config(const std::string& path, std::string_view command) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') return parse_config_text(text);

    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config JSON must be an object");
    if (doc.contains("command") && doc["command"] != command) {
        throw ConfigError("manifest was written by '" + doc["command"].get<std::string>() + "', not '" +
                          std::string(command) + "'");
    }
    std::vector<std::pair<std::string, std::string>> out;
    if (doc.contains("config")) {
        for (const auto& [key, value] : doc["config"].items()) {
            out.emplace_back(normalize_key(key), value.is_string() ? value.get<std::string>() : value.dump());
        }
    }
    if (doc.contains("master_seed")) out.emplace_back("seed", doc["master_seed"].dump());
    return out;
}

std::vector<std::string> expand_config(std::vector<std::string> args) {
    const auto cmd = std::find_if(args.begin(), args.end(), [](const std::string& a) {
        return std::find(kCommands.begin(), kCommands.end(), a) != kCommands.end();
    });
    if (cmd == args.end()) return args;
    std::optional<std::string> path;
    for (auto it = cmd + 1; it != args.end(); ++it) {
        if (*it == "--config" && it + 1 != args.end()) path = *(it + 1);
        if (it->rfind("--config=", 0) == 0) path = it->substr(9);
    }
    if (!path) return args;
    const std::string command = *cmd;
    std::vector<std::string> extra;
    for (const auto& [key, value] : load_config(*path, command)) {
        if (key == "config" || has_flag(args, key) || has_flag(extra, key)) continue;
        extra.push_back("--" + key + "=" + value);
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

int run(std::vector<std::string> args) {
    try {
        args = expand_config(std::move(args));
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ExitCode::config_error;
    }

    CLI::App app{"Monte Carlo tools for an SIS epidemic with moving particles and site contamination", "contagion"};
    app.set_version_flag("--version", std::string(CONTAGION_VERSION));
    app.require_subcommand(1);

    Common common;
    SimulateCmd simulate;
    SweepCmd sweep;
    PhaseCmd phase;
    CoupleCmd couple;
    BoundsCmd bounds;
    PercCmd perc;

    struct Entry {
        CLI::App* app;
        std::unique_ptr<OptionSet> options;
        std::function<Outcome(const Context&)> execute;
    };
    std::vector<Entry> entries;
    auto register_cmd = [&](const std::string& name, const std::string& help, auto& cmd) {
        CLI::App* sub = app.add_subcommand(name, help);
        auto options = std::make_unique<OptionSet>(sub);
        sub->add_option("--config", common.config, "key = value file or a run manifest");
        sub->add_option("--seed", common.seed, "master seed (falls back to CONTAGION_SEED, then 0)");
        sub->add_option("--out-dir", common.out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", common.threads, "worker threads (0 = all cores)")->capture_default_str();
        options->add("format", common.format, "output format")->check(CLI::IsMember({"csv", "json"}));
        cmd.add(*options);
        entries.push_back({sub, std::move(options), [&cmd](const Context& ctx) { return cmd(ctx); }});
    };
    register_cmd("simulate", "one run of the epidemic; writes the trajectory or the run result", simulate);
    register_cmd("sweep", "survival curve over independent replicas", sweep);
    register_cmd("phase", "phase-diagram search: lambda_c at gamma = inf, then gamma_c per lambda", phase);
    register_cmd("couple", "thinning-coupled runs with a domination check", couple);
    register_cmd("bounds", "branching bound on the offspring mean, and lambda*", bounds);
    register_cmd("perc", "region openness trials and site percolation comparison", perc);

    std::vector<const char*> argv{"contagion"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ExitCode::ok : ExitCode::config_error;
    }

    const auto active = std::find_if(entries.begin(), entries.end(), [](const Entry& e) { return e.app->parsed(); });
    const std::string command = active->app->get_name();

    Context ctx;
    try {
        const auto env_seed = seed_from_env();
        ctx.seed = common.seed ? *common.seed : env_seed.value_or(0);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ExitCode::config_error;
    }
    ctx.threads = common.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : common.threads;
    ctx.json_output = common.format == "json";

    const std::filesystem::path out_dir(common.out_dir);
    try {
        prepare_output_dir(out_dir);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ExitCode::io_error;
    }

    Manifest manifest;
    manifest.command = command;
    manifest.version = CONTAGION_VERSION;
    manifest.seed_scheme = kSeedScheme;
    manifest.master_seed = ctx.seed;
    manifest.config = active->options->values();
    manifest.threads = ctx.threads;

    auto write_manifest = [&] {
        write_text_file(out_dir / "manifest.json", to_json(manifest).dump(2) + "\n");
    };

    const auto started = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
        outcome = active->execute(ctx);
    } catch (const std::exception& e) {
        // ConfigError, and invalid_argument / range_error raised while validating inputs.
        if (!dynamic_cast<const ConfigError*>(&e) && !dynamic_cast<const std::invalid_argument*>(&e) &&
            !dynamic_cast<const std::range_error*>(&e)) {
            throw;
        }
        std::cerr << "error: " << e.what() << "\n";
        manifest.exit_code = ExitCode::config_error;
        try {
            write_manifest();
        } catch (const IoError&) {
        }
        return ExitCode::config_error;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    manifest.wall_clock_seconds = seconds;
    manifest.events = outcome.events;
    manifest.events_per_second = seconds > 0 ? static_cast<double>(outcome.events) / seconds : 0.0;
    manifest.exit_code = outcome.code;
    try {
        for (const auto& [name, content] : outcome.files) {
            write_text_file(out_dir / name, content);
            manifest.outputs.push_back(name);
        }
        write_manifest();
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ExitCode::io_error;
    }
    for (const auto& name : manifest.outputs) std::cout << (out_dir / name).string() << "\n";
    if (outcome.code == ExitCode::unresolved) std::cerr << "search unresolved; see outputs\n";
    return outcome.code;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args));
}

}  // namespace contagion::cli
