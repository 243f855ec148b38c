#include "pdl/carpet/carpet.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "pdl/arw/stabilize.hpp"
#include "pdl/kernel/errors.hpp"

namespace pdl::carpet {

namespace {

constexpr std::size_t kEventHistory = 100;

} // namespace

std::string to_string(Mode m) { return m == Mode::A ? "A" : "B"; }
std::string to_string(Direction d) { return d == Direction::Left ? "left" : "right"; }

std::string to_string(const EmissionOutcome& o) {
    switch (o.kind) {
    case EmissionOutcome::Kind::Emitted:
        return "Emitted{" + to_string(o.direction) + ", " + std::to_string(o.emitter) + "->" +
               std::to_string(o.receiver) + (o.fixed_defect ? ", defect fixed" : "") + "}";
    case EmissionOutcome::Kind::Failure: return "Failure{" + std::to_string(o.emitter) + "}";
    case EmissionOutcome::Kind::ProcedureFinished: return "ProcedureFinished";
    case EmissionOutcome::Kind::Capped: return "Capped";
    }
    return "?";
}

CarpetState::CarpetState(arw::RingConfig ring, int a) : ring_(std::move(ring)), a_(a) {
    if (a < 2 || a % 2 != 0) throw ParameterError("carpet: a must be an even integer >= 2");
    K_ = a * a;
    const std::size_t N = ring_.size();
    const auto K = static_cast<std::size_t>(K_);
    if (N % K != 0 || N / K < 4 || (N / K) % 2 != 0)
        throw ParameterError("carpet: N = " + std::to_string(N) + " is not of the form (n+2)a^2 with n even, a = " +
                             std::to_string(a));
    n_ = static_cast<int>(N / K) - 2;
    lo_ = -K_ / 2 + (a_ == K_ / 2 ? 1 : 0);
    if (!ring_.max_one_per_site()) throw ParameterError("carpet: configuration has a site with two or more particles");

    carpet_.assign(N, 0);
    hole_.assign(N, 0);
    defect_.assign(N, 0);
    for (std::size_t b = 0; b < blocks(); ++b) {
        const std::size_t s = base_site(b);
        hole_[s] = 1;
        if (ring_[s].count() == 1)
            add_free(s, false);
        else
            log_event("init: block " + std::to_string(b) + " starts without a free particle");
    }
    for (std::size_t s = 0; s < N; ++s) {
        if (hole_[s]) continue;
        if (ring_[s].count() == 1)
            carpet_[s] = 1;
        else
            defect_[s] = 1;
    }
}

std::size_t CarpetState::block_of_site(std::size_t s) const {
    return ((s + static_cast<std::size_t>(-lo_)) / static_cast<std::size_t>(K_)) % blocks();
}

std::size_t CarpetState::site_at(std::size_t physical_block, long r) const {
    const long N = static_cast<long>(ring_.size());
    long s = (static_cast<long>(physical_block) * K_ + r) % N;
    if (s < 0) s += N;
    return static_cast<std::size_t>(s);
}

std::size_t CarpetState::frozen_count() const {
    return static_cast<std::size_t>(std::count_if(free_.begin(), free_.end(), [](const auto& f) { return f.frozen; }));
}

std::size_t CarpetState::defect_count() const {
    return static_cast<std::size_t>(std::count(defect_.begin(), defect_.end(), 1));
}

std::size_t CarpetState::defects_in_block(std::size_t b) const {
    std::size_t c = 0;
    for (long r = lo_; r < lo_ + K_; ++r) c += defect_[site_at(b, r)];
    return c;
}

int CarpetState::hole_offset(std::size_t b) const {
    for (int v = 0; v <= a_; ++v)
        if (hole_[site_at(b, v)]) return v;
    return -1;
}

std::size_t CarpetState::frozen_in_block(std::size_t b) const {
    std::size_t c = 0;
    for (const auto& f : free_)
        if (f.frozen && block_of_site(f.site) == b) ++c;
    return c;
}

void CarpetState::log_event(std::string e) {
    events_.push_back(std::move(e));
    if (events_.size() > kEventHistory) events_.pop_front();
}

std::size_t CarpetState::add_free(std::size_t site, bool frozen) {
    free_.push_back({site, frozen, next_stamp_++});
    return free_.size() - 1;
}

void CarpetState::remove_free(std::size_t particle) {
    free_.erase(free_.begin() + static_cast<long>(particle));
    if (hot_) {
        if (*hot_ == particle)
            hot_.reset();
        else if (*hot_ > particle)
            --*hot_;
    }
}

std::string CarpetState::dump(const std::vector<std::string>& violations) const {
    std::ostringstream o;
    o << "carpet-state-dump v1\n";
    o << "N " << N() << " a " << a_ << " K " << K_ << " n " << n_ << " mode " << to_string(mode_) << " offset "
      << offset_ << "\n";
    o << "violations";
    for (const auto& v : violations) o << ' ' << v;
    o << "\n[blocks]\n";
    for (std::size_t b = 0; b < blocks(); ++b)
        o << "block " << b << " logical " << logical_block(b) << " hole_offset " << hole_offset(b) << " defects "
          << defects_in_block(b) << " frozen " << frozen_in_block(b) << "\n";
    o << "[sites]\n";
    for (std::size_t s = 0; s < N(); ++s) {
        o << s << ' ' << ring_[s].str() << (carpet_[s] ? " carpet" : "") << (hole_[s] ? " hole" : "")
          << (defect_[s] ? " defect" : "");
        for (std::size_t p = 0; p < free_.size(); ++p)
            if (free_[p].site == s)
                o << " free#" << p << (free_[p].frozen ? "(frozen)" : "") << (hot_ && *hot_ == p ? "(hot)" : "");
        o << "\n";
    }
    o << "[free]\n";
    for (std::size_t p = 0; p < free_.size(); ++p)
        o << p << " site " << free_[p].site << " frozen " << free_[p].frozen << " stamp " << free_[p].stamp << "\n";
    o << "[events]\n";
    for (const auto& e : events_) o << e << "\n";
    return o.str();
}

std::vector<std::string> check_properties(const CarpetState& st) {
    std::set<int> bad;
    const int a = st.a();
    const long K = st.K();
    const long lo = st.territory_lo();
    for (std::size_t b = 0; b < st.blocks(); ++b) {
        std::vector<long> holes;
        std::size_t defects = 0;
        for (long r = lo; r < lo + K; ++r) {
            const std::size_t s = st.site_at(b, r);
            if (st.hole(s)) holes.push_back(r);
            if (st.defect(s)) ++defects;
        }
        const bool one_hole = holes.size() == 1 && holes[0] >= 0 && holes[0] <= a;
        if (!one_hole) bad.insert(1);
        if (defects > 0 && !st.hole(st.site_at(b, 0))) bad.insert(3);
        if (one_hole) {
            for (long r = holes[0] + 1; r <= a; ++r) {
                const std::size_t s = st.site_at(b, r);
                if (st.carpet(s) && st.ring()[s].is_sleeping()) bad.insert(4);
            }
        }
        std::size_t frozen = 0;
        bool frozen_off_position = false;
        for (const auto& f : st.free_particles()) {
            if (!f.frozen || st.block_of_site(f.site) != b) continue;
            ++frozen;
            if (f.site != st.site_at(b, a)) frozen_off_position = true;
        }
        if (frozen > 1) bad.insert(7);
        const bool hole_at_a = st.hole(st.site_at(b, a));
        if ((frozen > 0) != hole_at_a || frozen_off_position) bad.insert(8);
    }
    for (std::size_t s = 0; s < st.N(); ++s) {
        if (!st.carpet(s) && !st.hole(s) && !st.defect(s)) bad.insert(2);
        if (st.carpet(s) && (st.hole(s) || st.defect(s))) bad.insert(2);
    }
    const auto& fr = st.free_particles();
    for (std::size_t p = 0; p < fr.size(); ++p) {
        if (!st.ring()[fr[p].site].is_active()) bad.insert(5);
        if (st.hot() && *st.hot() == p) continue;
        const std::size_t b = st.block_of_site(fr[p].site);
        if (fr[p].site != st.site_at(b, 0) && fr[p].site != st.site_at(b, a)) bad.insert(6);
    }
    if (st.hot()) {
        if (*st.hot() >= fr.size() || fr[*st.hot()].frozen) bad.insert(9);
    }
    std::vector<std::string> out;
    for (int p : bad) out.push_back("P" + std::to_string(p));
    return out;
}

std::vector<std::string> check_consistency(const CarpetState& st) {
    std::vector<std::string> out;
    std::vector<int> implied(st.N(), 0);
    for (std::size_t s = 0; s < st.N(); ++s) implied[s] = st.carpet(s) ? 1 : 0;
    for (const auto& f : st.free_particles()) ++implied[f.site];
    for (std::size_t s = 0; s < st.N(); ++s) {
        if (implied[s] != st.ring()[s].count()) {
            out.push_back("count@" + std::to_string(s));
            break;
        }
    }
    for (std::size_t s = 0; s < st.N(); ++s) {
        const bool literal_defect = !st.hole(s) && st.ring()[s].count() == 0;
        if (literal_defect != st.defect(s)) {
            out.push_back("defect@" + std::to_string(s));
            break;
        }
    }
    return out;
}

std::optional<HotChoice> choose_hot(const CarpetState& st) {
    const auto& fr = st.free_particles();
    for (std::size_t i = 1; i <= static_cast<std::size_t>(st.n()); ++i) {
        const std::size_t b = st.physical_block(i);
        const std::size_t s0 = st.site_at(b, 0), sa = st.site_at(b, st.a());
        std::optional<std::size_t> at0, ata;
        for (std::size_t p = 0; p < fr.size(); ++p) {
            if (fr[p].frozen) continue;
            if (fr[p].site == s0 && (!at0 || fr[p].stamp < fr[*at0].stamp)) at0 = p;
            if (fr[p].site == sa && (!ata || fr[p].stamp < fr[*ata].stamp)) ata = p;
        }
        if (!at0 && !ata) continue;
        if (st.defects_in_block(b) > 0) continue;
        const std::size_t p = at0 ? *at0 : *ata;
        return HotChoice{i, fr[p].site, p};
    }
    return std::nullopt;
}

bool ModeStats::mass_balance_ok() const {
    for (std::size_t j = 0; j + 1 < L.size(); ++j) {
        if (L[j + 1] != M[j] + D[j]) return false;
        if (R[j] != M_from_left[j + 1] + D_from_left[j + 1]) return false;
    }
    return true;
}

Procedure::Procedure(CarpetState& state, arw::InstructionStack& stacks, ProcedureOptions opts)
    : st_(state), stacks_(stacks), opts_(std::move(opts)) {
    if (stacks_.size() != st_.N()) throw ParameterError("carpet: stack/ring size mismatch");
}

void Procedure::verify(const char* where) {
    ++checks_;
    auto v = check_properties(st_);
    auto c = check_consistency(st_);
    v.insert(v.end(), c.begin(), c.end());
    if (v.empty()) return;
    const std::string dump = st_.dump(v);
    std::string msg = std::string("carpet invariant violated (") + where + "):";
    for (const auto& x : v) msg += " " + x;
    if (!opts_.dump_dir.empty()) {
        std::filesystem::create_directories(opts_.dump_dir);
        const auto path = std::filesystem::path(opts_.dump_dir) / ("carpet_violation_" + std::to_string(checks_) + ".txt");
        std::ofstream(path) << dump;
        msg += " (dump: " + path.string() + ")";
    }
    throw InvariantViolation(msg, dump);
}

void Procedure::finish_emission(std::size_t particle, std::size_t site, std::size_t emitter_phys,
                                std::size_t receiver_phys, Direction dir, EmissionOutcome& out) {
    out.kind = EmissionOutcome::Kind::Emitted;
    out.direction = dir;
    out.emitter = st_.logical_block(emitter_phys);
    out.receiver = st_.logical_block(receiver_phys);
    st_.hot_.reset();
    if (st_.defect_[site]) {
        st_.defect_[site] = 0;
        st_.remove_free(particle);
        st_.carpet_[site] = 1;
        out.fixed_defect = true;
    } else {
        st_.free_[particle].stamp = st_.next_stamp_++;
    }
    if (stats_) {
        ++stats_->emissions;
        if (dir == Direction::Left) {
            ++stats_->L[out.emitter];
            ++(out.fixed_defect ? stats_->D : stats_->M)[out.receiver];
        } else {
            ++stats_->R[out.emitter];
            ++(out.fixed_defect ? stats_->D_from_left : stats_->M_from_left)[out.receiver];
        }
        if (std::find(stats_->emitting_blocks.begin(), stats_->emitting_blocks.end(), out.emitter) ==
            stats_->emitting_blocks.end())
            stats_->emitting_blocks.push_back(out.emitter);
    }
    st_.log_event(to_string(out) + " at site " + std::to_string(site));
}

EmissionOutcome Procedure::attempted_emission() {
    if (opts_.check_invariants) verify("entry");
    EmissionOutcome out;
    const auto choice = choose_hot(st_);
    if (!choice) {
        out.kind = EmissionOutcome::Kind::ProcedureFinished;
        return out;
    }
    if (stats_) ++stats_->attempts;

    const std::size_t b = st_.physical_block(choice->block);
    const long K = st_.K_;
    const long a = st_.a_;
    std::size_t hot = choice->particle;
    st_.hot_ = hot;
    long r = choice->site == st_.site_at(b, 0) ? 0 : a;
    out.emitter = choice->block;
    auto site = [&](long rr) { return st_.site_at(b, rr); };
    st_.log_event("hot: block " + std::to_string(choice->block) + " site " + std::to_string(choice->site));

    // Returns true when the hot particle, now at relative position nr, is emitted.
    const long lo = st_.lo_;
    auto try_emit = [&](long nr) -> bool {
        if (nr >= lo && nr < lo + K) return false;
        if (nr >= lo + 2 * K || nr < lo - K)
            throw InvariantViolation("carpet: hot particle left the neighbouring blocks", st_.dump({"hot-range"}));
        const bool right = nr >= lo + K;
        const std::size_t recv = (b + (right ? 1 : st_.blocks() - 1)) % st_.blocks();
        const long rr = right ? nr - K : nr + K;
        const std::size_t s = site(nr);
        bool emitted;
        if (st_.defects_in_block(recv) == 0)
            emitted = right ? rr == 0 : rr == a;
        else
            emitted = st_.ring_[s].count() == 1;
        if (!emitted) return false;
        finish_emission(hot, s, b, recv, right ? Direction::Right : Direction::Left, out);
        return true;
    };

    auto do_topple = [&](long rr) {
        ++topplings_;
        return arw::topple(st_.ring_, stacks_, site(rr));
    };

    if (st_.frozen_in_block(b) > 0) {
        // A frozen particle sits at bK + a: topple until emitted.
        long span_lo = r, span_hi = r;
        for (;;) {
            if (topplings_ >= opts_.step_cap) {
                out.kind = EmissionOutcome::Kind::Capped;
                return out;
            }
            const auto t = do_topple(r);
            if (t.instruction == arw::Instruction::Sleep) {
                if (st_.ring_[site(r)].is_sleeping())
                    throw InvariantViolation("carpet: hot particle fell asleep away from a hole", st_.dump({"hot-sleep"}));
                continue;
            }
            r += t.instruction == arw::Instruction::JumpLeft ? -1 : 1;
            st_.free_[hot].site = site(r);
            span_lo = std::min(span_lo, r);
            span_hi = std::max(span_hi, r);
            if (try_emit(r)) {
                if (span_lo <= 0 && span_hi >= a) {
                    const std::size_t sa = site(a), s0 = site(0);
                    for (std::size_t p = 0; p < st_.free_.size(); ++p) {
                        if (st_.free_[p].frozen && st_.free_[p].site == sa) {
                            st_.remove_free(p);
                            break;
                        }
                    }
                    st_.hole_[sa] = 0;
                    st_.carpet_[sa] = 1;
                    st_.hole_[s0] = 1;
                    st_.carpet_[s0] = 0;
                    st_.add_free(s0, false);
                    st_.log_event("reset: block " + std::to_string(choice->block) + " thawed");
                }
                return out;
            }
        }
    }

    enum class Phase { Approach, AtHole, Excursion };
    long h = st_.hole_offset(b);
    Phase phase = r == h ? Phase::AtHole : Phase::Approach;
    long leftmost = h;
    for (;;) {
        if (topplings_ >= opts_.step_cap) {
            out.kind = EmissionOutcome::Kind::Capped;
            return out;
        }
        const auto t = do_topple(r);
        if (t.instruction == arw::Instruction::Sleep) {
            if (!st_.ring_[site(r)].is_sleeping()) continue;
            if (r != h)
                throw InvariantViolation("carpet: hot particle fell asleep away from the hole", st_.dump({"hot-sleep"}));
            // The hot particle becomes carpet; the hole moves one site right.
            st_.remove_free(hot);
            st_.carpet_[site(h)] = 1;
            st_.hole_[site(h)] = 0;
            ++h;
            st_.hole_[site(h)] = 1;
            st_.carpet_[site(h)] = 0;
            if (h == a) {
                st_.add_free(site(h), true);
                st_.hot_.reset();
                out.kind = EmissionOutcome::Kind::Failure;
                if (stats_) ++stats_->failures;
                st_.log_event("failure: block " + std::to_string(choice->block) + " froze");
                return out;
            }
            hot = st_.add_free(site(h), false);
            st_.hot_ = hot;
            r = h;
            phase = Phase::AtHole;
            continue;
        }
        r += t.instruction == arw::Instruction::JumpLeft ? -1 : 1;
        st_.free_[hot].site = site(r);
        if (try_emit(r)) return out;
        switch (phase) {
        case Phase::Approach:
            if (r == h) phase = Phase::AtHole;
            break;
        case Phase::AtHole:
            phase = Phase::Excursion;
            leftmost = std::min(h, r);
            break;
        case Phase::Excursion:
            leftmost = std::min(leftmost, r);
            if (r != h) break;
            phase = Phase::AtHole;
            if (const long nh = std::max(leftmost, 0L); nh < h) {
                st_.remove_free(hot);
                st_.carpet_[site(h)] = 1;
                st_.hole_[site(h)] = 0;
                st_.hole_[site(nh)] = 1;
                st_.carpet_[site(nh)] = 0;
                hot = st_.add_free(site(nh), false);
                st_.hot_ = hot;
                h = nh;
                r = nh;
            }
            break;
        }
    }
}

ModeStats Procedure::run_mode() {
    ModeStats ms;
    const std::size_t B = st_.blocks();
    ms.mode = st_.mode_;
    for (auto* v : {&ms.L, &ms.R, &ms.M, &ms.D, &ms.M_from_left, &ms.D_from_left, &ms.S}) v->assign(B, 0);
    ms.conserved_start = static_cast<std::int64_t>(st_.free_count()) - static_cast<std::int64_t>(st_.defect_count());
    const std::uint64_t j0 = stacks_.jumps_consumed();
    const std::uint64_t t0 = topplings_;
    stats_ = &ms;
    bool aborted = false;
    while (ms.attempts < opts_.emission_cap) {
        const EmissionOutcome o = attempted_emission();
        if (o.kind == EmissionOutcome::Kind::ProcedureFinished) break;
        if (o.kind == EmissionOutcome::Kind::Capped) {
            ms.capped = true;
            aborted = true;
            break;
        }
        if (opts_.check_invariants) {
            verify("after attempted emission");
            const auto c = static_cast<std::int64_t>(st_.free_count()) - static_cast<std::int64_t>(st_.defect_count());
            if (c != ms.conserved_start)
                throw InvariantViolation("carpet: free - defects changed from " + std::to_string(ms.conserved_start) +
                                             " to " + std::to_string(c),
                                         st_.dump({"conservation"}));
        }
    }
    if (ms.attempts >= opts_.emission_cap) ms.capped = true;
    stats_ = nullptr;
    ms.jumps = stacks_.jumps_consumed() - j0;
    ms.topplings = topplings_ - t0;
    for (std::size_t i = 0; i < B; ++i) ms.S[i] = st_.frozen_in_block(st_.physical_block(i));
    std::sort(ms.emitting_blocks.begin(), ms.emitting_blocks.end());
    for (std::size_t i : ms.emitting_blocks) ms.frozen_in_emitting += ms.S[i];
    ms.frozen_total = st_.frozen_count();
    ms.defects_end = st_.defect_count();
    ms.free_end = st_.free_count();
    ms.conserved_end = static_cast<std::int64_t>(ms.free_end) - static_cast<std::int64_t>(ms.defects_end);
    const auto n = static_cast<std::uint64_t>(st_.n_);
    ms.balance_condition = 8 * ms.free_end >= 7 * n + 8 * ms.defects_end && 8 * ms.frozen_total <= 5 * n;
    if (!aborted) {
        st_.offset_ = (st_.offset_ + n / 2 + 1) % B;
        st_.mode_ = st_.mode_ == Mode::A ? Mode::B : Mode::A;
        st_.log_event("mode end: now " + to_string(st_.mode_) + " offset " + std::to_string(st_.offset_));
    }
    return ms;
}

arw::RingConfig initial_config(std::size_t N, double zeta, int a, VacancyPlacement placement,
                               const kernel::StreamKey& key) {
    if (N == 0) throw ParameterError("initial_config: N must be positive");
    if (!(zeta >= 0.0 && zeta <= 1.0)) throw ParameterError("initial_config: zeta must be in [0, 1]");
    const auto particles = static_cast<std::size_t>(std::floor(zeta * static_cast<double>(N) + 1e-9));
    const std::size_t vacancies = N - std::min(particles, N);
    const std::size_t K = a > 0 ? static_cast<std::size_t>(a * a) : 0;

    std::vector<std::size_t> candidates;
    for (std::size_t s = 0; s < N; ++s)
        if (K == 0 || N % K != 0 || s % K != 0) candidates.push_back(s);
    if (candidates.size() < vacancies) {
        candidates.resize(N);
        std::iota(candidates.begin(), candidates.end(), 0);
    }
    std::vector<int> counts(N, 1);
    const std::size_t M = candidates.size();
    if (placement == VacancyPlacement::Even) {
        for (std::size_t k = 0; k < vacancies; ++k) counts[candidates[(2 * k + 1) * M / (2 * vacancies)]] = 0;
    } else {
        kernel::Stream rng(key.child("vacancies"));
        for (std::size_t k = 0; k < vacancies; ++k) {
            const std::size_t j = k + rng.uniform_index(M - k);
            std::swap(candidates[k], candidates[j]);
            counts[candidates[k]] = 0;
        }
    }
    return arw::RingConfig::from_counts(counts);
}

CarpetRunResult run_until_stable(const arw::RingConfig& config, int a, arw::InstructionStack& stacks,
                                 std::size_t mode_cap, std::uint64_t step_cap, ProcedureOptions opts) {
    CarpetRunResult res;
    arw::RingConfig ring = config;
    const std::uint64_t j0 = stacks.jumps_consumed();
    const auto fl = arw::pre_flatten(ring, stacks, step_cap);
    res.flatten_jumps = fl.odometer.jumps;
    std::uint64_t used = fl.odometer.total();
    if (!fl.completed) {
        res.capped = true;
        res.total_jumps = stacks.jumps_consumed() - j0;
        res.final_config = std::move(ring);
        return res;
    }

    CarpetState state(ring, a);
    if (check_properties(state).empty() && !ring.is_stable()) {
        res.carpet_started = true;
        opts.step_cap = step_cap - used;
        Procedure proc(state, stacks, opts);
        int idle = 0;
        while (res.modes_completed < mode_cap) {
            ModeStats ms = proc.run_mode();
            const bool aborted = ms.capped && proc.step_cap_hit();
            const bool empty = ms.attempts == 0;
            res.modes.push_back(std::move(ms));
            res.jump_trace.push_back(stacks.jumps_consumed() - j0);
            if (aborted) {
                res.capped = true;
                break;
            }
            ++res.modes_completed;
            idle = empty ? idle + 1 : 0;
            if (idle >= 2) break;
        }
        used += proc.topplings();
        res.carpet_jumps = stacks.jumps_consumed() - j0 - res.flatten_jumps;
        ring = state.ring();
    }
    if (!res.capped) {
        const auto fb = arw::stabilize(ring, stacks, arw::SchedulingPolicy::leftmost(), step_cap - used);
        res.fallback_jumps = fb.odometer.jumps;
        res.stabilized = fb.terminated;
        res.capped = !fb.terminated;
    }
    res.total_jumps = stacks.jumps_consumed() - j0;
    res.final_config = std::move(ring);
    return res;
}

} // namespace pdl::carpet
