#include "pdl/arw/ring.hpp"

#include <sstream>

#include "pdl/kernel/errors.hpp"

namespace pdl::arw {

SiteState SiteState::active(int k) {
    if (k < 1) throw ParameterError("SiteState::active requires k >= 1");
    return SiteState(k);
}

std::string SiteState::str() const {
    if (is_empty()) return "E";
    if (is_sleeping()) return "S";
    return "A" + std::to_string(raw_);
}

RingConfig::RingConfig(std::size_t n) : RingConfig(std::vector<SiteState>(n)) {}

RingConfig::RingConfig(std::vector<SiteState> states) : states_(std::move(states)) {
    if (states_.empty()) throw ParameterError("RingConfig: ring size must be positive");
    bits_.assign((states_.size() + 63) / 64, 0);
    for (std::size_t x = 0; x < states_.size(); ++x) {
        particles_ += static_cast<std::uint64_t>(states_[x].count());
        if (states_[x].is_active()) {
            bits_[x >> 6] |= 1ULL << (x & 63);
            ++unstable_;
        }
    }
}

RingConfig RingConfig::from_counts(const std::vector<int>& counts) {
    std::vector<SiteState> st;
    st.reserve(counts.size());
    for (int c : counts) {
        if (c < 0) throw ParameterError("RingConfig::from_counts: negative count");
        st.push_back(c == 0 ? SiteState::empty() : SiteState::active(c));
    }
    return RingConfig(std::move(st));
}

RingConfig RingConfig::parse(const std::string& text) {
    std::vector<SiteState> st;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto b = tok.find_first_not_of(" []");
        const auto e = tok.find_last_not_of(" []");
        if (b == std::string::npos) throw ParameterError("RingConfig::parse: empty token");
        tok = tok.substr(b, e - b + 1);
        if (tok == "E" || tok == "0") {
            st.push_back(SiteState::empty());
        } else if (tok == "S") {
            st.push_back(SiteState::sleeping());
        } else if (tok[0] == 'A') {
            st.push_back(SiteState::active(std::stoi(tok.substr(1))));
        } else {
            st.push_back(SiteState::active(std::stoi(tok)));
        }
    }
    return RingConfig(std::move(st));
}

void RingConfig::set(std::size_t x, SiteState s) {
    const SiteState old = states_[x];
    particles_ = particles_ - static_cast<std::uint64_t>(old.count()) + static_cast<std::uint64_t>(s.count());
    if (old.is_active() != s.is_active()) {
        bits_[x >> 6] ^= 1ULL << (x & 63);
        if (s.is_active())
            ++unstable_;
        else
            --unstable_;
    }
    states_[x] = s;
}

bool RingConfig::max_one_per_site() const {
    for (const auto& s : states_)
        if (s.count() > 1) return false;
    return true;
}

std::size_t RingConfig::leftmost_unstable() const {
    for (std::size_t w = 0; w < bits_.size(); ++w)
        if (bits_[w]) return w * 64 + static_cast<std::size_t>(std::countr_zero(bits_[w]));
    return size();
}

std::size_t RingConfig::rightmost_unstable() const {
    for (std::size_t w = bits_.size(); w-- > 0;)
        if (bits_[w]) return w * 64 + 63 - static_cast<std::size_t>(std::countl_zero(bits_[w]));
    return size();
}

std::size_t RingConfig::next_unstable_from(std::size_t from) const {
    if (unstable_ == 0) return size();
    from %= size();
    std::size_t w = from >> 6;
    std::uint64_t word = bits_[w] & (~0ULL << (from & 63));
    for (std::size_t i = 0; i <= bits_.size(); ++i) {
        if (word) return w * 64 + static_cast<std::size_t>(std::countr_zero(word));
        w = (w + 1) % bits_.size();
        word = bits_[w];
    }
    return size();
}

std::size_t RingConfig::kth_unstable(std::size_t k) const {
    for (std::size_t w = 0; w < bits_.size(); ++w) {
        std::uint64_t word = bits_[w];
        const auto c = static_cast<std::size_t>(std::popcount(word));
        if (k >= c) {
            k -= c;
            continue;
        }
        for (std::size_t i = 0; i < k; ++i) word &= word - 1;
        return w * 64 + static_cast<std::size_t>(std::countr_zero(word));
    }
    return size();
}

std::string RingConfig::str() const {
    std::string out = "[";
    for (std::size_t x = 0; x < states_.size(); ++x) {
        if (x) out += ",";
        out += states_[x].str();
    }
    return out + "]";
}

} // namespace pdl::arw
