#include "pdl/contact/config.hpp"

#include <algorithm>
#include <sstream>

#include "pdl/kernel/errors.hpp"

namespace pdl::contact {

std::string to_string(Fill f) {
    switch (f) {
    case Fill::None: return "none";
    case Fill::AllInfected: return "all-infected";
    case Fill::AllHealthy: return "all-healthy";
    }
    return "?";
}

InfectionConfig InfectionConfig::finite(const std::vector<long>& sites) {
    InfectionConfig c;
    for (long x : sites) c.insert(x);
    return c;
}

InfectionConfig InfectionConfig::half_line(long right, long width, Fill fill) {
    if (width < 1) throw ParameterError("half_line: width must be >= 1");
    std::vector<long> sites;
    for (long x = right - width + 1; x <= right; ++x) sites.push_back(x);
    return windowed(right - width + 1, width, sites, fill);
}

InfectionConfig InfectionConfig::windowed(long lo, long width, const std::vector<long>& sites, Fill fill) {
    if (fill == Fill::None) throw ParameterError("windowed: a fill rule is required");
    if (width < 1) throw ParameterError("windowed: width must be >= 1");
    InfectionConfig c;
    c.fill_ = fill;
    c.lo_ = lo;
    c.width_ = width;
    c.base_ = lo;
    for (long x : sites) c.insert(x);
    return c;
}

bool InfectionConfig::bit(long x) const {
    const long i = x - base_;
    return i >= 0 && i < static_cast<long>(bits_.size()) && bits_[static_cast<std::size_t>(i)];
}

bool InfectionConfig::contains(long x) const {
    if (fill_ != Fill::None && x < lo_) return fill_ == Fill::AllInfected;
    return bit(x);
}

bool InfectionConfig::empty() const {
    return fill_ != Fill::AllInfected && count_ == 0;
}

long InfectionConfig::right() const {
    if (count_ > 0) return max_;
    if (fill_ == Fill::AllInfected) return lo_ - 1;
    throw UndefinedView("right edge of the empty configuration");
}

std::optional<long> InfectionConfig::left() const {
    if (fill_ == Fill::AllInfected) return std::nullopt;
    if (count_ == 0) throw UndefinedView("left edge of the empty configuration");
    return min_;
}

std::vector<long> InfectionConfig::sites() const {
    std::vector<long> out;
    out.reserve(count_);
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) out.push_back(base_ + static_cast<long>(i));
    return out;
}

void InfectionConfig::ensure(long x) {
    if (bits_.empty()) {
        base_ = x - 16;
        bits_.assign(64, 0);
    }
    if (x < base_) {
        const long grow = std::max<long>(base_ - x + 16, static_cast<long>(bits_.size()));
        bits_.insert(bits_.begin(), static_cast<std::size_t>(grow), 0);
        base_ -= grow;
    } else if (x - base_ >= static_cast<long>(bits_.size())) {
        // Drop storage below the window before growing to the right.
        if (fill_ != Fill::None && lo_ - base_ > static_cast<long>(bits_.size()) / 2) {
            const auto cut = static_cast<std::size_t>(lo_ - base_);
            bits_.erase(bits_.begin(), bits_.begin() + static_cast<long>(cut));
            base_ = lo_;
        }
        const long need = x - base_ + 1;
        if (need > static_cast<long>(bits_.size()))
            bits_.resize(static_cast<std::size_t>(std::max<long>(need + 16, 2 * static_cast<long>(bits_.size()))), 0);
    }
}

bool InfectionConfig::insert(long x) {
    if (fill_ != Fill::None && x < lo_) return false;
    if (bit(x)) return false;
    ensure(x);
    bits_[static_cast<std::size_t>(x - base_)] = 1;
    if (count_ == 0) {
        min_ = max_ = x;
    } else {
        min_ = std::min(min_, x);
        max_ = std::max(max_, x);
    }
    ++count_;
    return true;
}

bool InfectionConfig::erase(long x) {
    if (!bit(x)) return false;
    bits_[static_cast<std::size_t>(x - base_)] = 0;
    --count_;
    if (count_ == 0) return true;
    if (x == max_)
        while (!bit(max_)) --max_;
    if (x == min_)
        while (!bit(min_)) ++min_;
    return true;
}

void InfectionConfig::raise_window(long new_lo) {
    if (fill_ == Fill::None) throw ParameterError("raise_window on a configuration without a window");
    if (new_lo <= lo_) return;
    if (count_ > 0)
        for (long x = std::max(lo_, min_); x < new_lo && count_ > 0; ++x) erase(x);
    lo_ = new_lo;
}

InfectionConfig InfectionConfig::shifted(long d) const {
    InfectionConfig c = *this;
    c.lo_ += d;
    c.base_ += d;
    c.min_ += d;
    c.max_ += d;
    return c;
}

InfectionConfig InfectionConfig::edge_view() const {
    if (empty()) throw UndefinedView("edge view of the empty configuration");
    return shifted(-right());
}

InfectionConfig edge_view(const InfectionConfig& c) { return c.edge_view(); }

std::string InfectionConfig::pattern(long L) const {
    const long r = right();
    std::string s(static_cast<std::size_t>(L + 1), '0');
    for (long j = 0; j <= L; ++j)
        if (contains(r - L + j)) s[static_cast<std::size_t>(j)] = '1';
    return s;
}

bool InfectionConfig::subset_of(const InfectionConfig& o) const {
    if (fill_ == Fill::AllInfected) {
        if (o.fill_ != Fill::AllInfected) return false;
        for (long x = o.lo_; x < lo_; ++x)
            if (!o.contains(x)) return false;
    }
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i] && !o.contains(base_ + static_cast<long>(i))) return false;
    return true;
}

bool InfectionConfig::operator==(const InfectionConfig& o) const {
    if (fill_ != o.fill_ || count_ != o.count_) return false;
    if (fill_ != Fill::None && lo_ != o.lo_) return false;
    return sites() == o.sites();
}

std::string InfectionConfig::str() const {
    std::ostringstream os;
    if (fill_ != Fill::None) os << "[" << to_string(fill_) << " below " << lo_ << "] ";
    os << "{";
    bool first = true;
    for (long x : sites()) {
        os << (first ? "" : ",") << x;
        first = false;
    }
    os << "}";
    return os.str();
}

} // namespace pdl::contact
