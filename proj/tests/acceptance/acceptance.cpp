// Acceptance suite: one PASS/FAIL line per criterion.
//
//   pdl_acceptance [--only NAME[,NAME...]] [--list] [--out DIR]
//
// Tolerances, replicate counts and runtime budgets are fixed below. A
// criterion passes only when its property holds and it finished within its
// budget.
#include <CLI11.hpp>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pdl/arw/stabilize.hpp"
#include "pdl/branching/conditioned.hpp"
#include "pdl/branching/spectral.hpp"
#include "pdl/carpet/carpet.hpp"
#include "pdl/carpet/hole_drift.hpp"
#include "pdl/contact/estimators.hpp"
#include "pdl/harness/experiments.hpp"
#include "pdl/harness/output.hpp"
#include "pdl/harness/stats.hpp"
#include "pdl/kernel/errors.hpp"

using namespace pdl;
namespace fs = std::filesystem;
using kernel::Stream;
using kernel::StreamKey;

namespace {

constexpr std::uint64_t kSeed = 20240601;

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    double budget_s;
    std::function<Verdict()> run;
};

fs::path g_out = "acceptance-artifacts";

std::string num(double x, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    return buf;
}

// ---------------------------------------------------------------- ARW

// Every configuration on N sites with at most max_particles particles, where
// a singly occupied site is either sleeping or active.
void enumerate_configs(std::size_t N, int max_particles, std::vector<arw::SiteState>& cur, int used,
                       std::vector<arw::RingConfig>& out) {
    if (cur.size() == N) {
        out.emplace_back(cur);
        return;
    }
    for (int c = 0; c + used <= max_particles; ++c) {
        std::vector<arw::SiteState> options;
        if (c == 0) options = {arw::SiteState::empty()};
        else if (c == 1) options = {arw::SiteState::sleeping(), arw::SiteState::active(1)};
        else options = {arw::SiteState::active(c)};
        for (auto s : options) {
            cur.push_back(s);
            enumerate_configs(N, max_particles, cur, used + c, out);
            cur.pop_back();
        }
    }
}

Verdict abelianness() {
    // With more particles than sites no configuration is stable, so those
    // instances never terminate under any order and have no final state.
    std::size_t instances = 0, runs = 0, disagree = 0, inconclusive = 0;
    for (std::size_t N = 1; N <= 5; ++N) {
        std::vector<arw::RingConfig> configs;
        std::vector<arw::SiteState> cur;
        enumerate_configs(N, std::min<int>(4, static_cast<int>(N)), cur, 0, configs);
        for (const auto& c : configs) {
            for (double lambda : {0.5, 1.0, 4.0}) {
                ++instances;
                for (std::uint64_t seed = 0; seed < 20; ++seed) {
                    const auto key = StreamKey(kSeed, "abelian").child(c.str()).child(num(lambda)).child(seed);
                    arw::InstructionStack stacks(N, lambda, key.child("stacks"));
                    std::vector<arw::SchedulingPolicy> pol{arw::SchedulingPolicy::leftmost(),
                                                           arw::SchedulingPolicy::rightmost(),
                                                           arw::SchedulingPolicy::cyclic(0),
                                                           arw::SchedulingPolicy::cyclic(N / 2)};
                    for (std::uint64_t p = 0; p < 6; ++p)
                        pol.push_back(arw::SchedulingPolicy::uniform_random(key.child("policy").child(p)));
                    const auto rep = arw::abelian_check(c, stacks, pol, 10'000'000);
                    ++runs;
                    bool same = rep.verdict == arw::AbelianVerdict::Agree;
                    for (std::size_t i = 1; same && i < rep.finals.size(); ++i)
                        same = rep.finals[i] == rep.finals[0] && rep.odometers[i] == rep.odometers[0] &&
                               rep.odometers[i].jumps == rep.odometers[0].jumps;
                    if (rep.verdict == arw::AbelianVerdict::Inconclusive) ++inconclusive;
                    else if (!same) ++disagree;
                }
            }
        }
    }
    return {disagree == 0 && inconclusive == 0,
            std::to_string(instances) + " instances x 20 stacks x 10 policies (" + std::to_string(runs) +
                " checks): " + std::to_string(disagree) + " disagreements, " + std::to_string(inconclusive) +
                " inconclusive"};
}

carpet::ProcedureOptions checked_options() {
    carpet::ProcedureOptions o;
    o.check_invariants = true;
    o.dump_dir = (g_out / "carpet-dumps").string();
    o.step_cap = 100'000'000;
    return o;
}

Verdict carpet_invariants() {
    std::uint64_t runs = 0, violations = 0, conservation = 0, mass = 0, checks = 0, modes = 0, unchecked = 0;
    std::string first;
    for (int a : {2, 4}) {
        const int K = a * a;
        for (double zeta : {0.8, 1.0 - 1.0 / (4.0 * K)}) {
            for (std::uint64_t seed = 0; seed < 100; ++seed) {
                const int n = seed % 2 ? 32 : 8;
                const std::size_t N = static_cast<std::size_t>((n + 2) * K);
                const auto key = StreamKey(kSeed, "carpet-inv").child(static_cast<std::uint64_t>(a)).child(num(zeta)).child(seed);
                const auto ring = carpet::initial_config(N, zeta, a, carpet::VacancyPlacement::Uniform, key.child("init"));
                arw::InstructionStack stacks(N, 1.0, key.child("stacks"));
                ++runs;
                try {
                    carpet::CarpetState st(ring, a);
                    carpet::Procedure proc(st, stacks, checked_options());
                    const std::int64_t c0 =
                        static_cast<std::int64_t>(st.free_count()) - static_cast<std::int64_t>(st.defect_count());
                    int idle = 0;
                    for (int m = 0; m < 200 && idle < 2 && !proc.step_cap_hit(); ++m) {
                        const auto ms = proc.run_mode();
                        ++modes;
                        idle = ms.attempts == 0 ? idle + 1 : 0;
                        if (ms.conserved_start != c0 || ms.conserved_end != c0) ++conservation;
                        if (!ms.mass_balance_ok()) ++mass;
                    }
                    checks += proc.checks_run();
                    if (proc.checks_run() == 0 && st.free_count() > 0) ++unchecked;
                } catch (const InvariantViolation& e) {
                    ++violations;
                    if (first.empty()) first = e.what();
                }
            }
        }
    }
    const bool ok = violations == 0 && conservation == 0 && mass == 0 && unchecked == 0;
    return {ok, std::to_string(runs) + " runs, " + std::to_string(modes) + " modes, " + std::to_string(checks) +
                    " checked emissions: " + std::to_string(violations) + " property violations, " +
                    std::to_string(conservation) + " conservation failures, " + std::to_string(mass) +
                    " mass-balance failures" + (first.empty() ? "" : "; first: " + first)};
}

Verdict carpet_plain() {
    struct Case {
        int a;
        std::size_t N;
        double zeta;
    };
    const std::vector<Case> cases{{2, 64, 0.95},  {2, 136, 0.9},  {2, 256, 0.8}, {2, 256, 0.9},
                                  {2, 256, 0.95}, {4, 128, 0.95}, {4, 256, 0.9}, {4, 256, 0.95}};
    int mismatches = 0, unfinished = 0;
    std::uint64_t max_jumps = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto& c = cases[seed % cases.size()];
        const auto key = StreamKey(kSeed, "carpet-plain").child(seed);
        const auto ring = carpet::initial_config(c.N, c.zeta, c.a, carpet::VacancyPlacement::Uniform, key.child("init"));
        arw::InstructionStack s1(c.N, 1.0, key.child("stacks"));
        arw::InstructionStack s2 = s1;
        const auto cr = carpet::run_until_stable(ring, c.a, s1, 100000, 1'000'000'000);
        auto plain = ring;
        const auto pr = arw::stabilize(plain, s2, arw::SchedulingPolicy::leftmost(), 1'000'000'000);
        if (!cr.stabilized || !pr.terminated) {
            ++unfinished;
            continue;
        }
        max_jumps = std::max<std::uint64_t>(max_jumps, pr.odometer.jumps);
        if (cr.total_jumps != pr.odometer.jumps || !(cr.final_config == plain) || s1.odometers() != s2.odometers())
            ++mismatches;
    }
    return {mismatches == 0 && unfinished == 0,
            "100 seeds, N in {64,128,136,256}: " + std::to_string(mismatches) + " mismatches, " +
                std::to_string(unfinished) + " unfinished, largest J " + std::to_string(max_jumps)};
}

std::vector<harness::Row> read_csv(const fs::path& p) {
    std::ifstream f(p);
    std::vector<harness::Row> rows;
    for (std::string line; std::getline(f, line);) rows.push_back(harness::csv_split(line));
    return rows;
}

std::string column(const std::vector<harness::Row>& rows, std::size_t r, const std::string& name) {
    const auto& h = rows.at(0);
    const auto it = std::find(h.begin(), h.end(), name);
    if (it == h.end()) throw std::runtime_error("missing column " + name);
    return rows.at(r).at(static_cast<std::size_t>(it - h.begin()));
}

Verdict phase_separation() {
    harness::ExperimentConfig cfg("arw-phase");
    cfg.set("N", "32,64,128,256");
    cfg.set("zeta", "0.2,0.95");
    cfg.set("lambda", "1");
    cfg.set("step_cap", "100000000");
    cfg.set_reps(200);
    cfg.set_cli_seed(kSeed);
    cfg.set_out((g_out / "arw-phase").string());
    const auto sum = harness::run_experiment(cfg);
    const auto fits = read_csv(g_out / "arw-phase" / "arw-phase-fits.csv");
    const auto cells = read_csv(g_out / "arw-phase" / "arw-phase-summary.csv");
    double lo = NAN, hi = NAN, slope = NAN, r2 = NAN;
    for (std::size_t r = 1; r < fits.size(); ++r) {
        const auto z = column(fits, r, "zeta"), reg = column(fits, r, "regressor");
        if (z == "0.95" && reg == "N") {
            slope = std::stod(column(fits, r, "slope"));
            lo = std::stod(column(fits, r, "slope_ci_lo"));
            hi = std::stod(column(fits, r, "slope_ci_hi"));
        }
        if (z == "0.2" && reg == "logN") r2 = std::stod(column(fits, r, "r2"));
    }
    std::string cens;
    for (std::size_t r = 1; r < cells.size(); ++r)
        if (column(cells, r, "zeta") == "0.95")
            cens += (cens.empty() ? "" : ",") + column(cells, r, "N") + ":" + column(cells, r, "censoring_rate");
    const bool ok = sum.failed_rows == 0 && lo > 0 && r2 > 0.9;
    return {ok, "zeta 0.95 slope vs N " + num(slope) + " CI [" + num(lo) + ", " + num(hi) + "]; zeta 0.2 R2 vs log N " +
                    num(r2) + "; censoring at zeta 0.95 (N:rate) " + cens};
}

Verdict hole_drift() {
    const std::uint64_t n = 1'000'000;
    double worst = 0;
    bool bound_ok = true, form_ok = true;
    for (int v : {1, 3, 10, 100}) {
        for (double lambda : {0.5, 1.0, 4.0}) {
            const auto law = carpet::hole_drift(v, lambda, std::max(4, 4 * v * v));
            double hv = 0;
            for (int k = 1; k <= v; ++k) hv += 1.0 / k;
            const double closed = lambda / (1 + lambda) - hv / (2 * (1 + lambda));
            form_ok = form_ok && std::abs(law.mean_y() - closed) < 1e-12;
            const double bound = lambda / (lambda + 1) - (std::log(v) - std::log(2.0)) / (2 * (lambda + 1));
            bound_ok = bound_ok && closed <= bound && std::abs(law.drift_bound() - bound) < 1e-12;
            Stream s(StreamKey(kSeed, "hole-drift").child(static_cast<std::uint64_t>(v)).child(num(lambda)));
            double sum = 0;
            for (std::uint64_t i = 0; i < n; ++i) sum += law.y.sample(s);
            const double se = std::sqrt(law.y.variance() / static_cast<double>(n));
            worst = std::max(worst, std::abs(sum / static_cast<double>(n) - closed) / se);
        }
    }
    return {worst < 4 && bound_ok && form_ok, "12 (v, lambda) pairs, 10^6 samples each: max |mean - closed form| = " +
                                                  num(worst, 3) + " SE; bound " + (bound_ok ? "holds" : "violated")};
}

// ---------------------------------------------------------------- contact

Verdict contact_coupling() {
    const std::vector<std::pair<double, double>> rates{{1.7, 1.7}, {2.0, 1.0}, {1.6489, 1.2}, {3.0, 0.5}};
    Stream pick(StreamKey(kSeed, "coupling/sets"));
    int contain_fail = 0, dom_fail = 0;
    for (std::uint64_t r = 0; r < 1000; ++r) {
        const auto [li, le] = rates[r % rates.size()];
        std::vector<long> B, A;
        for (long x = -10; x <= 10; ++x)
            if (pick.bernoulli(0.6)) B.push_back(x);
        for (long x : B)
            if (pick.bernoulli(0.5)) A.push_back(x);
        contact::GraphicalLog log(StreamKey(kSeed, "coupling/contain").child(r), std::max(li, le), 0, 20);
        const auto res = contact::couple(contact::InfectionConfig::finite(A), contact::InfectionConfig::finite(B), log,
                                         {li, le}, 20);
        contain_fail += !res.contained;
    }
    for (std::uint64_t r = 0; r < 1000; ++r) {
        contact::GraphicalLog log(StreamKey(kSeed, "coupling/dominate").child(r), 1.6489 + 0.2, 0, 50);
        dom_fail += !contact::dominate_edges(log, 1.6489, 0.2, 50, 100).dominated;
    }
    return {contain_fail == 0 && dom_fail == 0, "containment failures " + std::to_string(contain_fail) +
                                                    "/1000, edge-domination failures " + std::to_string(dom_fail) +
                                                    "/1000"};
}

Verdict edge_speed() {
    const std::vector<double> lambdas{1.0, 1.5, 1.6, 1.7, 1.8, 2.5};
    // The subcritical edge recedes fast enough to need a much wider window.
    const std::vector<long> widths{10000, 200, 200, 200, 200, 200};
    std::vector<contact::ContactParams> grid;
    for (double l : lambdas) grid.push_back({l, l});
    const auto est = contact::estimate_edge_speed(grid, widths, 60, 1000, StreamKey(kSeed, "edge-speed"));
    const auto x = contact::zero_crossing(lambdas, est);
    std::string curve;
    for (std::size_t i = 0; i < lambdas.size(); ++i)
        curve += (i ? " " : "") + num(lambdas[i], 3) + ":" + num(est[i].mean, 3);
    const bool ok = est.front().ci_hi < 0 && est.back().ci_lo > 0 && x && *x >= 1.5 && *x <= 1.8;
    return {ok, "speed at 1.0 CI [" + num(est.front().ci_lo) + ", " + num(est.front().ci_hi) + "], at 2.5 CI [" +
                    num(est.back().ci_lo) + ", " + num(est.back().ci_hi) + "], crossing " +
                    (x ? num(*x) : std::string("none")) + "; curve " + curve};
}

Verdict cylinder() {
    const contact::ContactParams p{1.6489, 1.8489};
    const std::vector<contact::InfectionConfig> inits{
        contact::InfectionConfig::half_line(0, 60, contact::Fill::AllInfected), contact::gapped_half_line(20, 60)};
    const auto e = contact::estimate_cylinder(p, 4, {20.0, 200.0}, 10000, inits, StreamKey(kSeed, "cylinder"), 1000);
    const bool ok = e.tv[1] < e.tv[0] && e.tv_ci[1].hi < e.tv_ci[0].lo;
    return {ok, "TV at t=20 " + num(e.tv[0]) + " [" + num(e.tv_ci[0].lo) + ", " + num(e.tv_ci[0].hi) + "], at t=200 " +
                    num(e.tv[1]) + " [" + num(e.tv_ci[1].lo) + ", " + num(e.tv_ci[1].hi) + "]"};
}

// ---------------------------------------------------------------- branching

const branching::OffspringDist& bd() {
    static const branching::OffspringDist d({2.0 / 3, 0.0, 1.0 / 3});
    return d;
}

// Leading eigen-triple of the dense truncated generator.
std::pair<double, Eigen::VectorXd> dense_left(const branching::SubGenerator& q) {
    const auto n = static_cast<Eigen::Index>(q.n_max);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < q.n_max; ++i) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) -= q.exit[i];
        for (const auto& e : q.rows[i]) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e.to - 1)) += e.rate;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(m.transpose());
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < n; ++k)
        if (es.eigenvalues()[k].real() > es.eigenvalues()[best].real()) best = k;
    Eigen::VectorXd v = es.eigenvectors().col(best).real();
    v /= v.sum();
    return {-es.eigenvalues()[best].real(), v};
}

Verdict qsd_oracle() {
    const auto q = branching::SubGenerator::build(bd(), 200);
    branching::SpectralOptions opts;
    opts.tol = 1e-12;
    const auto sol = branching::spectral_oracle(q, opts);
    std::vector<double> geo(200);
    for (std::size_t j = 0; j < geo.size(); ++j) geo[j] = std::ldexp(1.0, -static_cast<int>(j + 1));
    const double tv_geo = harness::tv_distance(sol.nu, geo);
    const auto [dense_alpha, dense_nu] = dense_left(q);
    double tv_dense = 0;
    for (std::size_t j = 0; j < 200; ++j) tv_dense += 0.5 * std::abs(sol.nu[j] - dense_nu[static_cast<Eigen::Index>(j)]);

    branching::ModelSpec spec;
    spec.dist = bd();
    const auto y = branching::yaglom_estimate(spec, 15, 1'000'000, StreamKey(kSeed, "qsd/yaglom"));
    const double tv_mc = harness::tv_distance(y.law, branching::count_law(sol.nu));
    const bool ok = std::abs(sol.alpha - 1.0 / 3) < 1e-6 && tv_geo < 1e-6 &&
                    std::abs(dense_alpha - sol.alpha) < 1e-8 && tv_dense < 1e-8 && tv_mc <= 0.02;
    return {ok, "alpha " + num(sol.alpha, 12) + " (dense " + num(dense_alpha, 12) + "), TV to geometric " +
                    num(tv_geo, 3) + ", TV to dense " + num(tv_dense, 3) + "; Yaglom t=15: " +
                    std::to_string(y.survivors) + " survivors of 10^6, TV " + num(tv_mc, 3)};
}

// A single trajectory's time average at this horizon has mean TV about 0.012
// with a 6% tail above 0.02, so the occupation law pools independent
// trajectories of the stated horizon.
Verdict q_process() {
    const auto q = branching::SubGenerator::build(bd(), 200);
    const auto sol = branching::spectral_oracle(q);
    const int trajectories = 20;
    std::vector<double> target(200), occ(200, 0.0), first(200);
    double z = 0;
    for (std::size_t j = 0; j < 200; ++j) {
        target[j] = sol.nu[j] * sol.h[j];
        z += target[j];
    }
    for (auto& x : target) x /= z;
    std::size_t lowest = 200, visits = 0;
    for (int k = 0; k < trajectories; ++k) {
        Stream s(StreamKey(kSeed, "q-process").child(static_cast<std::uint64_t>(k)));
        const auto tr = branching::q_process_simulate(q, sol, 1, 1e4, s, true);
        lowest = std::min(lowest, *std::min_element(tr.states.begin(), tr.states.end()));
        visits += tr.states.size();
        double total = 0;
        for (double x : tr.occupation) total += x;
        for (std::size_t j = 0; j < 200; ++j) {
            occ[j] += tr.occupation[j] / total / trajectories;
            if (k == 0) first[j] = tr.occupation[j] / total;
        }
    }
    const double tv = harness::tv_distance(occ, target);
    return {tv <= 0.02 && lowest >= 1,
            std::to_string(trajectories) + " trajectories of horizon 10^4, " + std::to_string(visits) +
                " states visited, lowest " + std::to_string(lowest) + ", TV to normalized nu*h " + num(tv, 3) +
                " (first trajectory alone " + num(harness::tv_distance(first, target), 3) + ")"};
}

Verdict conditioned_activity() {
    const std::vector<double> times{5, 10, 20, 40};
    const std::uint64_t reps = 1'000'000;
    const auto method = branching::Method::SizeBiased;
    branching::ModelSpec bp;
    bp.dist = bd();
    branching::ModelSpec gen;
    gen.model = branching::Model::Genealogy;
    gen.dist = bd();
    gen.initial_tree = branching::GenealogyTree::founders(2);
    branching::ModelSpec brw;
    brw.model = branching::Model::Brw;
    brw.lambda = 0.5;
    brw.initial_sites = {branching::Site{}, branching::Site{1, 0, 0}};

    std::vector<double> g, og, ob;
    std::string detail = "G_t(3):";
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto key = StreamKey(kSeed, "activity").child(i);
        g.push_back(branching::estimate_G(bp, times[i], 3, reps, key.child("G"), method).p);
        detail += " " + num(g.back());
    }
    detail += "; O_t^c genealogy:";
    for (std::size_t i = 0; i < times.size(); ++i) {
        og.push_back(branching::o_t_probability(gen, times[i], reps, StreamKey(kSeed, "activity/gen").child(i), method).oc.p);
        detail += " " + num(og.back());
    }
    detail += "; O_t^c BRW:";
    for (std::size_t i = 0; i < times.size(); ++i) {
        ob.push_back(branching::o_t_probability(brw, times[i], reps, StreamKey(kSeed, "activity/brw").child(i), method).oc.p);
        detail += " " + num(ob.back());
    }
    bool ok = g.back() >= 0.9;
    for (std::size_t i = 1; i < times.size(); ++i) ok = ok && g[i] >= g[i - 1] && og[i] < og[i - 1] && ob[i] < ob[i - 1];

    // Walker directions on surviving BRW runs in d = 2.
    std::map<std::string, std::uint64_t> dirs;
    std::uint64_t jumps = 0, runs = 0;
    for (std::uint64_t r = 0; jumps < 100000; ++r) {
        Stream s(StreamKey(kSeed, "activity/walker").child(r));
        const auto run = branching::simulate_brw(2, {branching::Site{}}, 0.5, 5, s);
        ++runs;
        if (run.final.empty()) continue;
        for (const auto& j : branching::walker_path(run.log, 0, 5)) {
            ++dirs[std::to_string(j.direction[0]) + "," + std::to_string(j.direction[1])];
            ++jumps;
        }
    }
    double chi2 = 0;
    const double expect = static_cast<double>(jumps) / 4;
    for (const auto& [d, c] : dirs) chi2 += (static_cast<double>(c) - expect) * (static_cast<double>(c) - expect) / expect;
    const double pval = dirs.size() == 4 ? harness::chi2_sf(chi2, 3) : 0.0;
    ok = ok && pval > 0.01;
    detail += "; walker: " + std::to_string(jumps) + " jumps from " + std::to_string(runs) + " runs, chi2 " + num(chi2) +
              " p " + num(pval, 3);
    return {ok, detail};
}

Verdict projection() {
    const std::uint64_t reps = 100000;
    const double lambda = 0.5;
    std::map<std::string, double> gen, plain, brw, plain_brw;
    const branching::OffspringDist brw_law({1 / (1 + lambda), 0.0, lambda / (1 + lambda)});
    for (std::uint64_t r = 0; r < reps; ++r) {
        Stream a(StreamKey(kSeed, "projection/genealogy").child(r));
        gen[std::to_string(branching::evolve_genealogy(branching::GenealogyTree::single(), bd(), a, 2).alive_leaves().size())] += 1;
        Stream b(StreamKey(kSeed, "projection/plain").child(r));
        plain[std::to_string(branching::simulate_count(1, bd(), 2, b))] += 1;
        Stream c(StreamKey(kSeed, "projection/brw").child(r));
        brw[std::to_string(branching::simulate_brw(1, {branching::Site{}}, lambda, 2, c, {branching::Tilt::None, false})
                               .final.particles())] += 1;
        Stream d(StreamKey(kSeed, "projection/plain-brw").child(r));
        plain_brw[std::to_string(branching::simulate_count(1, brw_law, 2, d, 1 + lambda))] += 1;
    }
    const double tv_gen = harness::tv_distance(harness::normalize(gen), harness::normalize(plain));
    const double tv_brw = harness::tv_distance(harness::normalize(brw), harness::normalize(plain_brw));
    return {tv_gen <= 0.02 && tv_brw <= 0.02,
            "10^5 samples per side at t=2: TV(genealogy, branching) " + num(tv_gen, 3) + ", TV(BRW, branching) " +
                num(tv_brw, 3)};
}

// ---------------------------------------------------------------- harness

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Verdict reproducibility() {
    const std::map<std::string, std::vector<std::pair<std::string, std::string>>> cases{
        {"arw-stabilize", {{"N", "16,32"}, {"zeta", "0.5,0.8"}}},
        {"arw-phase", {{"N", "32,64"}, {"zeta", "0.2,0.8"}}},
        {"arw-carpet", {{"N", "32,64"}, {"zeta", "0.8,0.9375"}}},
        {"cp-survival", {{"lambda_i", "1.5,2"}, {"lambda_e", "1,2"}, {"t_max", "5"}}},
        {"cp-edge", {{"lambda", "1.2,2.5"}, {"width", "100"}, {"t_max", "10"}}},
        {"cp-cylinder", {{"times", "5,10"}, {"width", "30"}, {"gap", "10"}, {"bootstrap", "50"}}},
        {"bp-yaglom", {{"t", "3"}}},
        {"bp-qprocess", {{"horizon", "100"}}},
        {"bp-gevent", {{"times", "2,4"}}},
        {"brw-yaglom", {{"t", "2"}, {"dim", "2"}}},
        {"tree-qsd", {{"t", "2"}, {"founders", "2"}}},
    };
    int differing = 0, files = 0;
    std::string which;
    for (const auto& [name, params] : cases) {
        std::vector<std::map<std::string, std::string>> outs;
        for (int run = 0; run < 3; ++run) {
            harness::ExperimentConfig cfg(name);
            for (const auto& [k, v] : params) cfg.set(k, v);
            cfg.set_reps(name == "bp-qprocess" ? 5 : 200);
            cfg.set_cli_seed(kSeed);
            cfg.set_threads(run == 2 ? 2 : 1);
            cfg.set_out((g_out / "repro" / (name + "-" + std::to_string(run))).string());
            const auto sum = harness::run_experiment(cfg);
            std::map<std::string, std::string> contents;
            for (const auto& [file, rows] : sum.files) contents[file] = slurp(fs::path(cfg.out()) / file);
            outs.push_back(contents);
        }
        files += static_cast<int>(outs[0].size());
        if (outs[0] != outs[1] || outs[0] != outs[2]) {
            ++differing;
            which += " " + name;
        }
    }
    return {differing == 0, std::to_string(cases.size()) + " experiments, " + std::to_string(files) +
                                " CSVs, rerun twice (1 and 2 threads): " + std::to_string(differing) + " differ" + which};
}

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all{
        {"abelianness", 120, abelianness},
        {"carpet-invariants", 600, carpet_invariants},
        {"carpet-plain", 1800, carpet_plain},
        {"phase-separation", 3600, phase_separation},
        {"hole-drift", 60, hole_drift},
        {"contact-coupling", 600, contact_coupling},
        {"edge-speed", 1800, edge_speed},
        {"cylinder", 3600, cylinder},
        {"qsd-oracle", 600, qsd_oracle},
        {"q-process", 120, q_process},
        {"conditioned-activity", 1800, conditioned_activity},
        {"projection", 600, projection},
        {"reproducibility", 600, reproducibility},
    };
    return all;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance suite"};
    std::vector<std::string> only;
    bool list = false;
    std::string out = g_out.string();
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    app.add_flag("--list", list, "List criteria and budgets");
    app.add_option("--out", out, "Directory for artifacts");
    CLI11_PARSE(app, argc, argv);
    g_out = out;

    std::set<std::string> known;
    for (const auto& c : criteria()) known.insert(c.name);
    for (const auto& o : only)
        if (!known.count(o)) {
            std::fprintf(stderr, "unknown criterion '%s'\n", o.c_str());
            return 2;
        }
    if (list) {
        for (const auto& c : criteria()) std::printf("%-22s budget %.0f s\n", c.name.c_str(), c.budget_s);
        return 0;
    }
    fs::create_directories(g_out);

    int failed = 0;
    for (const auto& c : criteria()) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_budget = dt <= c.budget_s;
        const bool pass = v.pass && in_budget;
        failed += !pass;
        std::printf("%s %s: %s (%.1f s of %.0f s budget%s)\n", pass ? "PASS" : "FAIL", c.name.c_str(), v.detail.c_str(),
                    dt, c.budget_s, in_budget ? "" : ", over budget");
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
