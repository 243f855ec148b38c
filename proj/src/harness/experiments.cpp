#include "pdl/harness/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <memory>

#include "pdl/arw/stabilize.hpp"
#include "pdl/branching/conditioned.hpp"
#include "pdl/branching/spectral.hpp"
#include "pdl/carpet/carpet.hpp"
#include "pdl/contact/estimators.hpp"
#include "pdl/harness/output.hpp"
#include "pdl/harness/stats.hpp"
#include "pdl/kernel/errors.hpp"

#ifndef PDL_VERSION_STRING
#define PDL_VERSION_STRING "dev"
#endif

namespace pdl::harness {

namespace {

namespace fs = std::filesystem;
using kernel::StreamKey;

// Replicas per task for experiments that only aggregate counts.
constexpr std::uint64_t kChunk = 10000;

class Context {
public:
    Context(const ExperimentConfig& cfg, RunSummary& sum)
        : cfg(cfg), sum(sum), seed(cfg.resolve_seed()), hash(cfg.hash()), root(seed.seed, cfg.experiment()) {}

    StreamKey cell(std::uint64_t c) const { return root.child("cell").child(c); }

    CsvWriter& open(const std::string& suffix, Row header) {
        header.insert(header.end(), {"seed", "config_hash", "status"});
        const std::string name = cfg.experiment() + suffix + ".csv";
        writers.push_back(std::make_unique<CsvWriter>((fs::path(cfg.out()) / name).string(), header));
        names.push_back(name);
        return *writers.back();
    }

    void write(CsvWriter& w, Row row, const std::string& error = {}) {
        row.push_back(fmt(seed.seed));
        row.push_back(hex64(hash));
        row.push_back(error.empty() ? "ok" : "error: " + error);
        if (!error.empty()) ++sum.failed_rows;
        w.write(row);
    }

    // Row with the leading fields given and the remaining ones blank.
    void write_failure(CsvWriter& w, Row lead, const std::string& error) {
        lead.resize(w.columns() - 3);
        write(w, std::move(lead), error.empty() ? "unknown failure" : error);
    }

    void finish() {
        for (std::size_t i = 0; i < writers.size(); ++i) {
            writers[i]->flush();
            sum.files.emplace_back(names[i], writers[i]->rows());
            sum.rows += writers[i]->rows();
        }
    }

    const ExperimentConfig& cfg;
    RunSummary& sum;
    SeedChoice seed;
    std::uint64_t hash;
    StreamKey root;
    std::vector<std::unique_ptr<CsvWriter>> writers;
    std::vector<std::string> names;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw ParameterError("config: " + what);
}

std::uint64_t chunks(std::uint64_t reps) { return (reps + kChunk - 1) / kChunk; }

carpet::VacancyPlacement placement_of(const std::string& s) {
    if (s == "uniform") return carpet::VacancyPlacement::Uniform;
    if (s == "even") return carpet::VacancyPlacement::Even;
    throw ParameterError("config: placement must be uniform or even, got '" + s + "'");
}

arw::SchedulingPolicy policy_of(const std::string& s, const StreamKey& key) {
    if (s == "leftmost") return arw::SchedulingPolicy::leftmost();
    if (s == "rightmost") return arw::SchedulingPolicy::rightmost();
    if (s == "cyclic") return arw::SchedulingPolicy::cyclic(0);
    if (s == "random") return arw::SchedulingPolicy::uniform_random(key);
    throw ParameterError("config: unknown policy '" + s + "'");
}

struct ArwGrid {
    std::vector<long> N;
    std::vector<double> zeta;
    double lambda;

    explicit ArwGrid(const ExperimentConfig& cfg)
        : N(cfg.get_int_list("N")), zeta(cfg.get_double_list("zeta")), lambda(cfg.get_double("lambda")) {
        for (long n : N) require(n >= 1, "N must be >= 1");
        for (double z : zeta) require(z >= 0 && z <= 1, "zeta must lie in [0, 1]");
        require(lambda > 0, "lambda must be > 0");
    }
    std::size_t cells() const { return N.size() * zeta.size(); }
    std::size_t n_of(std::size_t c) const { return static_cast<std::size_t>(N[c / zeta.size()]); }
    double zeta_of(std::size_t c) const { return zeta[c % zeta.size()]; }
};

bool carpet_compatible(long N, int a) {
    const long K = static_cast<long>(a) * a;
    return a >= 2 && a % 2 == 0 && N % K == 0 && N / K >= 4 && (N / K - 2) % 2 == 0;
}

// ---------------------------------------------------------------- ARW

void run_arw_stabilize(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const ArwGrid g(cfg);
    const auto policy = cfg.get_string("policy");
    policy_of(policy, StreamKey());
    const auto place = placement_of(cfg.get_string("placement"));
    const auto cap = cfg.get_int("step_cap");
    require(cap >= 0, "step_cap must be >= 0");
    const std::uint64_t reps = cfg.reps();

    auto& w = ctx.open("", {"N", "zeta", "lambda", "rep", "particles", "jumps", "topplings", "terminated"});
    struct Out {
        std::uint64_t particles, jumps, topplings;
        bool terminated;
    };
    ordered_map<Out>(
        g.cells() * reps, cfg.threads(),
        [&](std::size_t i) {
            const std::size_t c = i / reps, r = i % reps;
            const auto key = ctx.cell(c).child(r);
            auto ring = carpet::initial_config(g.n_of(c), g.zeta_of(c), 0, place, key.child("init"));
            arw::InstructionStack stacks(ring.size(), g.lambda, key.child("stacks"));
            const auto particles = ring.particle_count();
            const auto res = arw::stabilize(ring, stacks, policy_of(policy, key.child("policy")),
                                            static_cast<std::uint64_t>(cap));
            return Out{particles, res.odometer.jumps, res.steps, res.terminated};
        },
        [&](std::size_t i, std::optional<Out> o, const std::string& err) {
            const std::size_t c = i / reps, r = i % reps;
            Row lead{fmt(g.n_of(c)), fmt(g.zeta_of(c)), fmt(g.lambda), fmt(r)};
            if (!o) return ctx.write_failure(w, lead, err);
            lead.insert(lead.end(), {fmt(o->particles), fmt(o->jumps), fmt(o->topplings), fmt(o->terminated)});
            ctx.write(w, lead);
        });
}

void run_arw_phase(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const ArwGrid g(cfg);
    const auto cap = cfg.get_int("step_cap");
    require(cap >= 1, "step_cap must be >= 1");
    const auto driver = cfg.get_string("driver");
    require(driver == "plain" || driver == "carpet", "driver must be plain or carpet");
    const int a = static_cast<int>(cfg.get_int("a"));
    const auto mode_cap = cfg.get_int("mode_cap");
    require(mode_cap >= 1, "mode_cap must be >= 1");
    const auto place = placement_of(cfg.get_string("placement"));
    if (driver == "carpet")
        for (long n : g.N) require(carpet_compatible(n, a), "N = " + std::to_string(n) + " does not fit the carpet blocks");
    const std::uint64_t reps = cfg.reps();

    auto& w = ctx.open("", {"N", "zeta", "lambda", "rep", "jumps", "log_jumps", "censored"});
    auto& ws = ctx.open("-summary",
                        {"N", "zeta", "lambda", "reps", "mean_log_jumps", "se", "ci_lo", "ci_hi", "censoring_rate"});
    auto& wf = ctx.open("-fits", {"zeta", "regressor", "slope", "slope_ci_lo", "slope_ci_hi", "intercept", "r2"});

    struct Out {
        std::uint64_t jumps;
        bool censored;
    };
    std::vector<std::vector<double>> logs(g.cells());
    std::vector<std::uint64_t> censored(g.cells(), 0), failed(g.cells(), 0);
    ordered_map<Out>(
        g.cells() * reps, cfg.threads(),
        [&](std::size_t i) {
            const std::size_t c = i / reps, r = i % reps;
            const auto key = ctx.cell(c).child(r);
            const auto ring = carpet::initial_config(g.n_of(c), g.zeta_of(c), a, place, key.child("init"));
            arw::InstructionStack stacks(ring.size(), g.lambda, key.child("stacks"));
            if (driver == "carpet") {
                const auto res = carpet::run_until_stable(ring, a, stacks, static_cast<std::size_t>(mode_cap),
                                                          static_cast<std::uint64_t>(cap));
                return Out{res.total_jumps, !res.stabilized};
            }
            auto copy = ring;
            const auto res = arw::stabilize(copy, stacks, arw::SchedulingPolicy::leftmost(),
                                            static_cast<std::uint64_t>(cap));
            return Out{res.odometer.jumps, !res.terminated};
        },
        [&](std::size_t i, std::optional<Out> o, const std::string& err) {
            const std::size_t c = i / reps, r = i % reps;
            Row lead{fmt(g.n_of(c)), fmt(g.zeta_of(c)), fmt(g.lambda), fmt(r)};
            if (!o) {
                ++failed[c];
                return ctx.write_failure(w, lead, err);
            }
            const double lj = std::log1p(static_cast<double>(o->jumps));
            logs[c].push_back(lj);
            censored[c] += o->censored;
            lead.insert(lead.end(), {fmt(o->jumps), fmt(lj), fmt(o->censored)});
            ctx.write(w, lead);
        });
    if (reps == 0) return;

    std::map<double, std::pair<std::vector<double>, std::vector<double>>> by_zeta;
    for (std::size_t c = 0; c < g.cells(); ++c) {
        Row lead{fmt(g.n_of(c)), fmt(g.zeta_of(c)), fmt(g.lambda), fmt(reps)};
        if (logs[c].size() < 2) {
            ctx.write_failure(ws, lead, "fewer than two completed runs");
            continue;
        }
        const auto m = mean_ci(logs[c]);
        lead.insert(lead.end(), {fmt(m.mean), fmt(m.se), fmt(m.lo), fmt(m.hi),
                                 fmt(static_cast<double>(censored[c]) / static_cast<double>(logs[c].size()))});
        ctx.write(ws, lead, failed[c] ? std::to_string(failed[c]) + " runs failed" : "");
        by_zeta[g.zeta_of(c)].first.push_back(static_cast<double>(g.n_of(c)));
        by_zeta[g.zeta_of(c)].second.push_back(m.mean);
    }
    for (double z : g.zeta) {
        const auto& [ns, ms] = by_zeta[z];
        for (const char* reg : {"N", "logN"}) {
            std::vector<double> xs = ns;
            if (std::string(reg) == "logN")
                for (auto& x : xs) x = std::log(x);
            try {
                const auto f = linear_fit(xs, ms);
                const auto ci = f.n > 2 ? f.slope_ci() : std::make_pair(f.slope, f.slope);
                ctx.write(wf, {fmt(z), reg, fmt(f.slope), fmt(ci.first), fmt(ci.second), fmt(f.intercept), fmt(f.r2)});
            } catch (const Error& e) {
                ctx.write_failure(wf, {fmt(z), reg}, e.what());
            }
        }
    }
}

void run_arw_carpet(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const ArwGrid g(cfg);
    const int a = static_cast<int>(cfg.get_int("a"));
    for (long n : g.N) require(carpet_compatible(n, a), "N = " + std::to_string(n) + " does not fit the carpet blocks");
    const auto mode_cap = cfg.get_int("mode_cap");
    const auto cap = cfg.get_int("step_cap");
    require(mode_cap >= 1 && cap >= 1, "caps must be >= 1");
    const bool check = cfg.get_bool("check");
    const auto place = placement_of(cfg.get_string("placement"));
    const std::uint64_t reps = cfg.reps();

    auto& w = ctx.open("", {"N", "a", "zeta", "lambda", "rep", "modes", "flatten_jumps", "carpet_jumps", "fallback_jumps",
                            "total_jumps", "plain_jumps", "jumps_equal", "conserved", "mass_balance",
                            "first_mode_balance", "capped"});
    struct Out {
        carpet::CarpetRunResult res;
        std::uint64_t plain;
    };
    ordered_map<Out>(
        g.cells() * reps, cfg.threads(),
        [&](std::size_t i) {
            const std::size_t c = i / reps, r = i % reps;
            const auto key = ctx.cell(c).child(r);
            const auto ring = carpet::initial_config(g.n_of(c), g.zeta_of(c), a, place, key.child("init"));
            arw::InstructionStack stacks(ring.size(), g.lambda, key.child("stacks"));
            carpet::ProcedureOptions opts;
            opts.check_invariants = check;
            Out o{carpet::run_until_stable(ring, a, stacks, static_cast<std::size_t>(mode_cap),
                                           static_cast<std::uint64_t>(cap), opts),
                  0};
            stacks.rewind();
            auto copy = ring;
            o.plain = arw::stabilize(copy, stacks, arw::SchedulingPolicy::leftmost(), static_cast<std::uint64_t>(cap))
                          .odometer.jumps;
            return o;
        },
        [&](std::size_t i, std::optional<Out> o, const std::string& err) {
            const std::size_t c = i / reps, r = i % reps;
            Row lead{fmt(g.n_of(c)), fmt(a), fmt(g.zeta_of(c)), fmt(g.lambda), fmt(r)};
            if (!o) return ctx.write_failure(w, lead, err);
            const auto& res = o->res;
            bool conserved = true, balance = true;
            for (const auto& m : res.modes) {
                conserved = conserved && m.conserved_start == m.conserved_end;
                balance = balance && m.mass_balance_ok();
            }
            const bool first = !res.modes.empty() && res.modes[0].balance_condition;
            lead.insert(lead.end(), {fmt(res.modes_completed), fmt(res.flatten_jumps), fmt(res.carpet_jumps),
                                     fmt(res.fallback_jumps), fmt(res.total_jumps), fmt(o->plain),
                                     fmt(res.total_jumps == o->plain), fmt(conserved), fmt(balance), fmt(first),
                                     fmt(res.capped)});
            ctx.write(w, lead);
        });
}

// ---------------------------------------------------------------- contact

void run_cp_survival(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto li = cfg.get_double_list("lambda_i");
    const auto le = cfg.get_double_list("lambda_e");
    const double t_max = cfg.get_double("t_max");
    const auto init = cfg.get_int_list("initial");
    for (double x : li) require(x >= 0, "lambda_i must be >= 0");
    for (double x : le) require(x >= 0, "lambda_e must be >= 0");
    require(t_max > 0, "t_max must be > 0");
    const std::uint64_t reps = cfg.reps();
    const std::size_t cells = li.size() * le.size();

    auto& w = ctx.open("", {"lambda_i", "lambda_e", "t_max", "reps", "theta_hat", "ci_lo", "ci_hi"});
    ordered_map<contact::SurvivalEstimate>(
        reps > 0 ? cells : 0, cfg.threads(),
        [&](std::size_t c) {
            contact::ContactParams p;
            p.lambda_i = li[c / le.size()];
            p.lambda_e = le[c % le.size()];
            return contact::estimate_survival(p, init, t_max, reps, ctx.cell(c));
        },
        [&](std::size_t c, std::optional<contact::SurvivalEstimate> e, const std::string& err) {
            Row lead{fmt(li[c / le.size()]), fmt(le[c % le.size()]), fmt(t_max), fmt(reps)};
            if (!e) return ctx.write_failure(w, lead, err);
            lead.insert(lead.end(), {fmt(e->theta), fmt(e->ci_lo), fmt(e->ci_hi)});
            ctx.write(w, lead);
        });
}

void run_cp_edge(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto lambdas = cfg.get_double_list("lambda");
    auto widths = cfg.get_int_list("width");
    const double t_max = cfg.get_double("t_max");
    require(t_max >= 2, "t_max must be >= 2");
    for (double x : lambdas) require(x > 0, "lambda must be > 0");
    if (widths.size() == 1) widths.assign(lambdas.size(), widths[0]);
    require(widths.size() == lambdas.size(), "width needs one value or one per lambda");
    for (long x : widths) require(x >= 2, "width must be >= 2");
    std::vector<contact::ContactParams> grid;
    for (double l : lambdas) grid.push_back({l, l, contact::BorderMode::BothEdges});
    const double lmax = *std::max_element(lambdas.begin(), lambdas.end());
    const std::uint64_t reps = cfg.reps();

    auto& w = ctx.open("", {"rep", "lambda", "width", "t_max", "slope", "starved"});
    auto& ws = ctx.open("-summary",
                        {"lambda", "width", "t_max", "reps", "used", "discarded", "speed", "se", "ci_lo", "ci_hi"});
    auto& wc = ctx.open("-crossing", {"crossing"});
    std::vector<std::vector<contact::EdgeRun>> per_point(grid.size());
    const auto base = ctx.cell(0);
    ordered_map<std::vector<contact::EdgeRun>>(
        reps, cfg.threads(),
        [&](std::size_t r) {
            contact::GraphicalLog log(base.child(r), lmax, 0.0, t_max);
            return contact::edge_speed_runs(grid, widths, t_max, log);
        },
        [&](std::size_t r, std::optional<std::vector<contact::EdgeRun>> runs, const std::string& err) {
            for (std::size_t g = 0; g < grid.size(); ++g) {
                Row lead{fmt(r), fmt(lambdas[g]), fmt(widths[g]), fmt(t_max)};
                if (!runs) {
                    ctx.write_failure(w, lead, err);
                    continue;
                }
                per_point[g].push_back((*runs)[g]);
                lead.insert(lead.end(), {fmt((*runs)[g].slope), fmt((*runs)[g].starved)});
                ctx.write(w, lead);
            }
        });
    if (reps == 0) return;
    std::vector<contact::SpeedEstimate> est;
    bool complete = true;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        Row lead{fmt(lambdas[g]), fmt(widths[g]), fmt(t_max), fmt(reps)};
        try {
            const auto e = contact::aggregate_speed(per_point[g]);
            est.push_back(e);
            lead.insert(lead.end(), {fmt(e.used), fmt(e.discarded), fmt(e.mean), fmt(e.se), fmt(e.ci_lo), fmt(e.ci_hi)});
            ctx.write(ws, lead);
        } catch (const Error& e) {
            complete = false;
            ctx.write_failure(ws, lead, e.what());
        }
    }
    if (complete) {
        const auto x = contact::zero_crossing(lambdas, est);
        ctx.write(wc, {x ? fmt(*x) : std::string("none")});
    }
}

void run_cp_cylinder(Context& ctx) {
    const auto& cfg = ctx.cfg;
    contact::ContactParams p;
    p.lambda_i = cfg.get_double("lambda_i");
    p.lambda_e = cfg.get_double("lambda_e");
    require(p.lambda_i >= 0 && p.lambda_e >= 0, "rates must be >= 0");
    const long L = cfg.get_int("L");
    const auto times = cfg.get_double_list("times");
    const long width = cfg.get_int("width");
    const long gap = cfg.get_int("gap");
    const long boot = cfg.get_int("bootstrap");
    require(L >= 0 && L < 30, "L must be in 0..29");
    require(width > L + 1, "width must exceed L + 1");
    require(gap >= 1 && gap < width, "gap must be in 1..width-1");
    require(boot >= 0, "bootstrap must be >= 0");
    for (double t : times) require(t >= 0, "times must be >= 0");
    require(std::is_sorted(times.begin(), times.end()), "times must be sorted");
    const std::uint64_t reps = cfg.reps();
    const std::vector<std::string> names{"half_line", "gapped"};

    auto& w = ctx.open("", {"init", "t", "pattern", "count", "probability", "reps"});
    auto& wt = ctx.open("-tv", {"t", "tv", "ci_lo", "ci_hi", "reps"});
    ordered_map<contact::CylinderEstimate>(
        reps > 0 ? 1 : 0, 1,
        [&](std::size_t) {
            const std::vector<contact::InfectionConfig> inits{
                contact::InfectionConfig::half_line(0, width, contact::Fill::AllInfected),
                contact::gapped_half_line(gap, width)};
            return contact::estimate_cylinder(p, L, times, reps, inits, ctx.cell(0),
                                              static_cast<std::size_t>(boot));
        },
        [&](std::size_t, std::optional<contact::CylinderEstimate> e, const std::string& err) {
            if (!e) return ctx.write_failure(wt, {}, err);
            for (std::size_t i = 0; i < e->laws.size(); ++i)
                for (std::size_t k = 0; k < e->times.size(); ++k)
                    for (const auto& [pat, prob] : e->laws[i][k])
                        ctx.write(w, {names[i], fmt(e->times[k]), pat,
                                      fmt(static_cast<std::uint64_t>(std::llround(prob * static_cast<double>(reps)))),
                                      fmt(prob), fmt(reps)});
            for (std::size_t k = 0; k < e->times.size(); ++k)
                ctx.write(wt, {fmt(e->times[k]), fmt(e->tv[k]), fmt(e->tv_ci[k].lo), fmt(e->tv_ci[k].hi), fmt(reps)});
        });
}

// ---------------------------------------------------------------- branching

branching::OffspringDist offspring_of(const ExperimentConfig& cfg) {
    return branching::OffspringDist::parse(cfg.get_string("offspring"));
}

using Counts = std::map<std::string, std::uint64_t>;

// Runs reps conditioned samples in chunks and merges the state counts.
Counts collect_states(Context& ctx, const branching::ModelSpec& spec, double t, std::uint64_t& survivors,
                      std::string& error) {
    const std::uint64_t reps = ctx.cfg.reps();
    const auto base = ctx.cell(0);
    Counts total;
    ordered_map<Counts>(
        chunks(reps), ctx.cfg.threads(),
        [&](std::size_t c) {
            Counts out;
            const std::uint64_t hi = std::min<std::uint64_t>(reps, (c + 1) * kChunk);
            for (std::uint64_t r = c * kChunk; r < hi; ++r) {
                kernel::Stream s(base.child(r));
                if (auto state = branching::yaglom_sample(spec, t, s)) ++out[*state];
            }
            return out;
        },
        [&](std::size_t, std::optional<Counts> part, const std::string& err) {
            if (!part) {
                if (error.empty()) error = err;
                return;
            }
            for (const auto& [k, v] : *part) {
                total[k] += v;
                survivors += v;
            }
        });
    return total;
}

void check_subcritical(const branching::OffspringDist& d) {
    require(d.subcritical(), "offspring law must be subcritical (mean " + fmt(d.mean()) + ")");
}

void run_bp_yaglom(Context& ctx) {
    const auto& cfg = ctx.cfg;
    branching::ModelSpec spec;
    spec.dist = offspring_of(cfg);
    spec.rate = cfg.get_double("rate");
    spec.initial_count = static_cast<std::uint64_t>(std::max<long>(0, cfg.get_int("initial")));
    const double t = cfg.get_double("t");
    const long n_max = cfg.get_int("n_max");
    branching::SpectralOptions so;
    so.tol = cfg.get_double("tol");
    check_subcritical(spec.dist);
    require(spec.rate > 0, "rate must be > 0");
    require(cfg.get_int("initial") >= 1, "initial must be >= 1");
    require(t >= 0, "t must be >= 0");
    require(n_max >= 10, "n_max must be >= 10");
    require(so.tol > 0, "tol must be > 0");

    auto& w = ctx.open("", {"state", "count", "probability", "nu", "reps", "t"});
    auto& ws = ctx.open("-summary", {"reps", "t", "survivors", "survival", "tv_to_nu", "alpha", "n_max"});
    const auto sol = branching::spectral_oracle(spec.dist, static_cast<std::size_t>(n_max), so, spec.rate);
    {
        std::ofstream f(fs::path(cfg.out()) / (cfg.experiment() + "-spectral.txt"), std::ios::binary);
        f << sol.to_text();
    }
    const std::uint64_t reps = cfg.reps();
    std::uint64_t survivors = 0;
    std::string error;
    const Counts counts = collect_states(ctx, spec, t, survivors, error);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> rows;
    for (const auto& [k, v] : counts) rows.emplace_back(std::stoull(k), v);
    std::sort(rows.begin(), rows.end());
    Distribution emp;
    for (const auto& [state, c] : rows) {
        const double p = static_cast<double>(c) / static_cast<double>(survivors);
        emp[std::to_string(state)] = p;
        ctx.write(w, {fmt(state), fmt(c), fmt(p), fmt(sol.nu_at(state)), fmt(reps), fmt(t)});
    }
    if (reps == 0) return;
    Row lead{fmt(reps), fmt(t), fmt(survivors), fmt(static_cast<double>(survivors) / static_cast<double>(reps))};
    if (!error.empty() || survivors == 0) return ctx.write_failure(ws, lead, error.empty() ? "no surviving runs" : error);
    lead.insert(lead.end(), {fmt(tv_distance(emp, branching::count_law(sol.nu))), fmt(sol.alpha), fmt(n_max)});
    ctx.write(ws, lead);
}

void run_bp_qprocess(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto dist = offspring_of(cfg);
    const double rate = cfg.get_double("rate");
    const double horizon = cfg.get_double("horizon");
    const long initial = cfg.get_int("initial");
    const long n_max = cfg.get_int("n_max");
    branching::SpectralOptions so;
    so.tol = cfg.get_double("tol");
    check_subcritical(dist);
    require(rate > 0, "rate must be > 0");
    require(horizon > 0, "horizon must be > 0");
    require(n_max >= 10, "n_max must be >= 10");
    require(initial >= 1 && initial <= n_max, "initial must lie in 1..n_max");
    require(so.tol > 0, "tol must be > 0");

    auto& w = ctx.open("", {"state", "occupation", "nu_h", "reps", "horizon"});
    auto& ws = ctx.open("-summary", {"reps", "horizon", "tv", "min_state", "alpha"});
    const auto q = branching::SubGenerator::build(dist, static_cast<std::size_t>(n_max), rate);
    const auto sol = branching::spectral_oracle(q, so);
    const std::uint64_t reps = cfg.reps();
    std::vector<double> occ(static_cast<std::size_t>(n_max), 0.0);
    std::size_t min_state = static_cast<std::size_t>(n_max);
    std::string error;
    const auto base = ctx.cell(0);
    ordered_map<branching::QTrajectory>(
        reps, cfg.threads(),
        [&](std::size_t r) {
            kernel::Stream s(base.child(r));
            auto tr = branching::q_process_simulate(q, sol, static_cast<std::size_t>(initial), horizon, s, false);
            return tr;
        },
        [&](std::size_t, std::optional<branching::QTrajectory> tr, const std::string& err) {
            if (!tr) {
                if (error.empty()) error = err;
                return;
            }
            for (std::size_t j = 0; j < occ.size(); ++j) {
                occ[j] += tr->occupation[j];
                if (tr->occupation[j] > 0) min_state = std::min(min_state, j + 1);
            }
        });
    if (reps == 0) return;
    double z = 0, total = 0;
    for (std::size_t j = 0; j < occ.size(); ++j) {
        z += sol.nu[j] * sol.h[j];
        total += occ[j];
    }
    std::vector<double> a(occ.size()), b(occ.size());
    for (std::size_t j = 0; j < occ.size(); ++j) {
        a[j] = total > 0 ? occ[j] / total : 0.0;
        b[j] = sol.nu[j] * sol.h[j] / z;
        if (a[j] > 0 || b[j] > 1e-12) ctx.write(w, {fmt(j + 1), fmt(a[j]), fmt(b[j]), fmt(reps), fmt(horizon)});
    }
    Row lead{fmt(reps), fmt(horizon)};
    if (!error.empty() || total <= 0) return ctx.write_failure(ws, lead, error.empty() ? "no occupation" : error);
    lead.insert(lead.end(), {fmt(tv_distance(a, b)), fmt(min_state), fmt(sol.alpha)});
    ctx.write(ws, lead);
}

void run_bp_gevent(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto dist = offspring_of(cfg);
    const double lambda = cfg.get_double("lambda");
    const int dim = static_cast<int>(cfg.get_int("dim"));
    const auto times = cfg.get_double_list("times");
    const long k = cfg.get_int("k");
    const auto method_s = cfg.get_string("method");
    check_subcritical(dist);
    require(lambda > 0 && lambda < 1, "lambda must lie in (0, 1)");
    require(dim >= 1 && dim <= branching::kMaxDim, "dim must be 1..3");
    require(k >= 0, "k must be >= 0");
    for (double t : times) require(t > 0, "times must be > 0");
    require(method_s == "plain" || method_s == "size_biased", "method must be plain or size_biased");
    if (method_s == "size_biased") require(dist.mean() > 0, "size_biased needs a positive offspring mean");
    const auto method = method_s == "plain" ? branching::Method::Plain : branching::Method::SizeBiased;
    const std::uint64_t reps = cfg.reps();

    branching::ModelSpec bp;
    bp.dist = dist;
    branching::ModelSpec gen;
    gen.model = branching::Model::Genealogy;
    gen.dist = dist;
    gen.initial_tree = branching::GenealogyTree::founders(2);
    branching::ModelSpec brw;
    brw.model = branching::Model::Brw;
    brw.lambda = lambda;
    brw.dim = dim;
    branching::Site e1{};
    e1[0] = 1;
    brw.initial_sites = {branching::Site{}, e1};

    auto& w = ctx.open("", {"event", "model", "t", "k", "method", "reps", "p_hat", "se", "ci_lo", "ci_hi", "survival",
                            "mean_diameter", "mean_diameter_se"});
    const std::vector<std::string> events{"G", "Oc", "Oc"};
    const std::vector<std::string> models{"branching", "genealogy", "brw"};
    struct Out {
        branching::ConditionalEstimate e;
        double diam = 0, diam_se = 0;
    };
    ordered_map<Out>(
        reps > 0 ? 3 * times.size() : 0, cfg.threads(),
        [&](std::size_t i) {
            const std::size_t ti = i / 3, kind = i % 3;
            const auto key = ctx.cell(i);
            if (kind == 0)
                return Out{branching::estimate_G(bp, times[ti], static_cast<unsigned>(k), reps, key, method)};
            const auto o = branching::o_t_probability(kind == 1 ? gen : brw, times[ti], reps, key, method);
            return Out{o.oc, o.mean_diameter, o.mean_diameter_se};
        },
        [&](std::size_t i, std::optional<Out> o, const std::string& err) {
            const std::size_t ti = i / 3, kind = i % 3;
            Row lead{events[kind], models[kind], fmt(times[ti]), kind == 0 ? fmt(k) : std::string(""), method_s,
                     fmt(reps)};
            if (!o) return ctx.write_failure(w, lead, err);
            lead.insert(lead.end(), {fmt(o->e.p), fmt(o->e.se), fmt(o->e.lo), fmt(o->e.hi), fmt(o->e.survival),
                                     kind == 0 ? "" : fmt(o->diam), kind == 0 ? "" : fmt(o->diam_se)});
            ctx.write(w, lead);
        });
}

void write_state_law(Context& ctx, CsvWriter& w, CsvWriter& ws, const Counts& counts, std::uint64_t survivors,
                     const std::string& error, double t, bool tree) {
    const std::uint64_t reps = ctx.cfg.reps();
    for (const auto& [state, c] : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(survivors);
        Row row{state};
        if (tree) {
            const auto st = branching::tree_stats(branching::GenealogyTree::from_encoding(state));
            row.insert(row.end(), {fmt(st.alive), fmt(st.diameter)});
        }
        row.insert(row.end(), {fmt(c), fmt(p), fmt(reps), fmt(t)});
        ctx.write(w, row);
    }
    if (reps == 0) return;
    Row lead{fmt(reps), fmt(t), fmt(survivors), fmt(static_cast<double>(survivors) / static_cast<double>(reps))};
    if (!error.empty() || survivors == 0) return ctx.write_failure(ws, lead, error.empty() ? "no surviving runs" : error);
    lead.push_back(fmt(counts.size()));
    ctx.write(ws, lead);
}

void run_brw_yaglom(Context& ctx) {
    const auto& cfg = ctx.cfg;
    branching::ModelSpec spec;
    spec.model = branching::Model::Brw;
    spec.lambda = cfg.get_double("lambda");
    spec.dim = static_cast<int>(cfg.get_int("dim"));
    const double t = cfg.get_double("t");
    const long f = cfg.get_int("founders");
    require(spec.lambda > 0 && spec.lambda < 1, "lambda must lie in (0, 1)");
    require(spec.dim >= 1 && spec.dim <= branching::kMaxDim, "dim must be 1..3");
    require(t >= 0, "t must be >= 0");
    require(f >= 1 && f <= 1000, "founders must be in 1..1000");
    spec.initial_sites.clear();
    for (long i = 0; i < f; ++i) {
        branching::Site x{};
        x[0] = i;
        spec.initial_sites.push_back(x);
    }
    auto& w = ctx.open("", {"state", "count", "probability", "reps", "t"});
    auto& ws = ctx.open("-summary", {"reps", "t", "survivors", "survival", "states"});
    std::uint64_t survivors = 0;
    std::string error;
    const auto counts = collect_states(ctx, spec, t, survivors, error);
    write_state_law(ctx, w, ws, counts, survivors, error, t, false);
}

void run_tree_qsd(Context& ctx) {
    const auto& cfg = ctx.cfg;
    branching::ModelSpec spec;
    spec.model = branching::Model::Genealogy;
    spec.dist = offspring_of(cfg);
    const double t = cfg.get_double("t");
    const long f = cfg.get_int("founders");
    check_subcritical(spec.dist);
    require(t >= 0, "t must be >= 0");
    require(f >= 1 && f <= 1000, "founders must be in 1..1000");
    spec.initial_tree = branching::GenealogyTree::founders(static_cast<std::size_t>(f));
    auto& w = ctx.open("", {"state", "alive", "diameter", "count", "probability", "reps", "t"});
    auto& ws = ctx.open("-summary", {"reps", "t", "survivors", "survival", "states"});
    std::uint64_t survivors = 0;
    std::string error;
    const auto counts = collect_states(ctx, spec, t, survivors, error);
    write_state_law(ctx, w, ws, counts, survivors, error, t, true);
}

using Runner = void (*)(Context&);

Runner runner_for(const std::string& name) {
    static const std::map<std::string, Runner> table{
        {"arw-stabilize", run_arw_stabilize}, {"arw-phase", run_arw_phase},     {"arw-carpet", run_arw_carpet},
        {"cp-survival", run_cp_survival},     {"cp-edge", run_cp_edge},         {"cp-cylinder", run_cp_cylinder},
        {"bp-yaglom", run_bp_yaglom},         {"bp-qprocess", run_bp_qprocess}, {"bp-gevent", run_bp_gevent},
        {"brw-yaglom", run_brw_yaglom},       {"tree-qsd", run_tree_qsd},
    };
    const auto it = table.find(name);
    if (it == table.end()) throw ParameterError("unknown experiment '" + name + "'");
    return it->second;
}

// Parses every parameter of the experiment's table once so type errors
// surface before the output directory is touched.
void validate_types(const ExperimentConfig& cfg) {
    for (const auto& p : cfg.info().params) {
        switch (p.type) {
        case ParamType::Int: cfg.get_int(p.key); break;
        case ParamType::Double: cfg.get_double(p.key); break;
        case ParamType::String: cfg.get_string(p.key); break;
        case ParamType::Bool: cfg.get_bool(p.key); break;
        case ParamType::IntList: cfg.get_int_list(p.key); break;
        case ParamType::DoubleList: cfg.get_double_list(p.key); break;
        }
    }
    const auto& name = cfg.experiment();
    if (name.rfind("bp-", 0) == 0 || name == "tree-qsd") branching::OffspringDist::parse(cfg.get_string("offspring"));
}

// Semantic validation runs the experiment body against a scratch output
// directory with reps = 0, which performs all checks and no simulation.
void validate_semantics(const ExperimentConfig& cfg) {
    ExperimentConfig dry = cfg;
    dry.set_reps(0);
    dry.set_threads(1);
    const fs::path scratch = fs::temp_directory_path() / ("pdl-validate-" + hex64(cfg.hash()) + "-" +
                                                          std::to_string(reinterpret_cast<std::uintptr_t>(&dry)));
    fs::create_directories(scratch);
    dry.set_out(scratch.string());
    RunSummary sink;
    try {
        Context ctx(dry, sink);
        runner_for(cfg.experiment())(ctx);
    } catch (...) {
        fs::remove_all(scratch);
        throw;
    }
    fs::remove_all(scratch);
}

void write_manifest(const ExperimentConfig& cfg, const RunSummary& sum) {
    nlohmann::ordered_json j;
    j["experiment"] = cfg.experiment();
    j["version"] = PDL_VERSION_STRING;
    j["seed"] = sum.seed.seed;
    j["seed_source"] = sum.seed.source;
    j["config_hash"] = hex64(sum.config_hash);
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& p : cfg.info().params) params[p.key] = cfg.get_string(p.key);
    j["parameters"] = params;
    j["reps"] = cfg.reps();
    j["threads"] = cfg.threads();
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (const auto& [name, rows] : sum.files) files.push_back({{"name", name}, {"rows", rows}});
    j["files"] = files;
    j["rows"] = sum.rows;
    j["failed_rows"] = sum.failed_rows;
    j["status"] = sum.failed_rows ? "partial" : "ok";
    std::ofstream f(fs::path(cfg.out()) / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write manifest.json in '" + cfg.out() + "'");
    f << j.dump(2) << '\n';
}

} // namespace

RunSummary run_experiment(const ExperimentConfig& cfg) {
    validate_types(cfg);
    validate_semantics(cfg);
    RunSummary sum;
    sum.experiment = cfg.experiment();
    sum.out_dir = cfg.out();
    sum.seed = cfg.resolve_seed();
    sum.config_hash = cfg.hash();
    std::error_code ec;
    fs::create_directories(cfg.out(), ec);
    if (ec) throw Error("cannot create output directory '" + cfg.out() + "': " + ec.message());
    Context ctx(cfg, sum);
    runner_for(cfg.experiment())(ctx);
    ctx.finish();
    write_manifest(cfg, sum);
    return sum;
}

} // namespace pdl::harness
