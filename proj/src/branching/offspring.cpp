#include "pdl/branching/offspring.hpp"

#include <cmath>
#include <sstream>

#include "pdl/kernel/errors.hpp"

namespace pdl::branching {

OffspringDist::OffspringDist(std::vector<double> pmf) : pmf_(std::move(pmf)) {
    if (pmf_.empty()) throw ParameterError("offspring: empty pmf");
    double sum = 0;
    for (double p : pmf_) {
        if (!(p >= 0) || !std::isfinite(p)) throw ParameterError("offspring: probabilities must be finite and >= 0");
        sum += p;
    }
    if (std::abs(sum - 1) > 1e-9) throw ParameterError("offspring: pmf sums to " + std::to_string(sum));
    while (pmf_.size() > 1 && pmf_.back() == 0) pmf_.pop_back();
    mean_ = 0;
    for (std::size_t z = 0; z < pmf_.size(); ++z) mean_ += static_cast<double>(z) * pmf_[z];
}

OffspringDist OffspringDist::from_map(const std::map<int, double>& pmf) {
    if (pmf.empty()) throw ParameterError("offspring: empty pmf");
    if (pmf.begin()->first < 0) throw ParameterError("offspring: negative offspring count");
    std::vector<double> v(static_cast<std::size_t>(pmf.rbegin()->first) + 1, 0.0);
    for (const auto& [z, p] : pmf) v[static_cast<std::size_t>(z)] = p;
    return OffspringDist(std::move(v));
}

OffspringDist OffspringDist::parse(const std::string& text) {
    std::map<int, double> m;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ParameterError("offspring: expected z:p in '" + item + "'");
        try {
            const std::string rhs = item.substr(colon + 1);
            const auto slash = rhs.find('/');
            const double p = slash == std::string::npos ? std::stod(rhs)
                                                        : std::stod(rhs.substr(0, slash)) / std::stod(rhs.substr(slash + 1));
            m[std::stoi(item.substr(0, colon))] += p;
        } catch (const std::logic_error&) {
            throw ParameterError("offspring: cannot parse '" + item + "'");
        }
    }
    // Accept rounded decimals such as 0.6667 + 0.3333.
    double sum = 0;
    for (const auto& kv : m) sum += kv.second;
    if (std::abs(sum - 1) > 1e-3) throw ParameterError("offspring: pmf sums to " + std::to_string(sum));
    for (auto& kv : m) kv.second /= sum;
    return from_map(m);
}

std::size_t OffspringDist::sample(kernel::Stream& s) const {
    return kernel::sample_discrete(s, pmf_);
}

OffspringDist OffspringDist::size_biased() const {
    if (!(mean_ > 0)) throw ParameterError("offspring: size-biased law needs a positive mean");
    std::vector<double> q(pmf_.size());
    for (std::size_t z = 0; z < pmf_.size(); ++z) q[z] = static_cast<double>(z) * pmf_[z] / mean_;
    return OffspringDist(std::move(q));
}

std::string OffspringDist::str() const {
    std::ostringstream os;
    bool first = true;
    for (std::size_t z = 0; z < pmf_.size(); ++z) {
        if (pmf_[z] == 0) continue;
        os << (first ? "" : ",") << z << ":" << pmf_[z];
        first = false;
    }
    return os.str();
}

BranchingEvent step_branching(std::uint64_t count, const OffspringDist& dist, kernel::Stream& s, double rate) {
    if (count == 0) throw AbsorbedError("step_branching: no events from the empty population");
    BranchingEvent e;
    e.dt = kernel::sample_exponential(s, rate * static_cast<double>(count));
    e.individual = s.uniform_index(count);
    e.offspring = dist.sample(s);
    e.count = count - 1 + e.offspring;
    return e;
}

std::uint64_t simulate_count(std::uint64_t initial, const OffspringDist& dist, double t, kernel::Stream& s,
                             double rate, const CountObserver& observer) {
    const double moving = 1 - dist.p(1);
    if (moving <= 0) return initial;
    std::vector<double> jump(dist.pmf());
    jump.resize(std::max<std::size_t>(jump.size(), 2));
    jump[1] = 0;
    for (auto& p : jump) p /= moving;
    std::uint64_t n = initial;
    double now = 0;
    while (n > 0) {
        now += kernel::sample_exponential(s, rate * moving * static_cast<double>(n));
        if (now > t) break;
        n = n - 1 + kernel::sample_discrete(s, jump);
        if (observer) observer(now, n);
    }
    return n;
}

std::uint64_t simulate_count_size_biased(std::uint64_t initial, const OffspringDist& dist, double t,
                                         kernel::Stream& s, double rate, const CountObserver& observer) {
    if (initial == 0) throw AbsorbedError("size-biased count: initial state 0");
    // Non-distinguished individuals: rate (n-1)(1-p1), z ~ p given z != 1.
    // Distinguished line: rate m - p1, z ~ z p_z given z != 1.
    std::vector<double> plain(dist.pmf()), spine(dist.pmf());
    plain.resize(std::max<std::size_t>(plain.size(), 2));
    spine.resize(plain.size());
    plain[1] = spine[1] = 0;
    double sp = 0, ss = 0;
    for (std::size_t z = 0; z < plain.size(); ++z) {
        spine[z] *= static_cast<double>(z);
        sp += plain[z];
        ss += spine[z];
    }
    std::uint64_t n = initial;
    double now = 0;
    for (;;) {
        const double a = static_cast<double>(n - 1) * sp, b = ss;
        const double total = rate * (a + b);
        if (!(total > 0)) break;
        now += kernel::sample_exponential(s, total);
        if (now > t) break;
        std::size_t z;
        if (s.uniform() * (a + b) < a) {
            double u = s.uniform() * sp;
            z = 0;
            while (z + 1 < plain.size() && u >= plain[z]) u -= plain[z++];
        } else {
            double u = s.uniform() * ss;
            z = 0;
            while (z + 1 < spine.size() && u >= spine[z]) u -= spine[z++];
        }
        n = n - 1 + z;
        if (observer) observer(now, n);
    }
    return n;
}

} // namespace pdl::branching
