#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pdl::contact {

// What the configuration looks like to the left of the window.
enum class Fill { None, AllInfected, AllHealthy };

std::string to_string(Fill f);

// Set of infected sites of Z. With Fill::None it is a plain finite set. With
// a fill rule it is a window [lo, ...) of explicit sites plus a rule for
// everything below lo; AllInfected is the surrogate for configurations in
// which every site far enough to the left is infected.
class InfectionConfig {
public:
    InfectionConfig() = default;

    static InfectionConfig finite(const std::vector<long>& sites);
    // Sites right-width+1..right infected, `fill` below.
    static InfectionConfig half_line(long right, long width, Fill fill);
    // Window starting at lo with the given infected sites (sites below lo are
    // ignored).
    static InfectionConfig windowed(long lo, long width, const std::vector<long>& sites, Fill fill);

    Fill fill() const { return fill_; }
    bool windowed() const { return fill_ != Fill::None; }
    long window_lo() const { return lo_; }
    long width() const { return width_; }

    bool contains(long x) const;
    bool empty() const;
    // Rightmost infected site; under AllInfected with an empty window this is
    // lo - 1. Throws UndefinedView when empty.
    long right() const;
    // Leftmost infected site; nullopt when it is -infinity (AllInfected).
    std::optional<long> left() const;
    // Number of explicitly stored infected sites.
    std::size_t count() const { return count_; }
    std::vector<long> sites() const;

    // Return false when the site was dropped or already in the wanted state.
    bool insert(long x);
    bool erase(long x);

    // Moves lo up to new_lo (never down). Sites below the new lo follow the
    // fill rule from then on.
    void raise_window(long new_lo);

    InfectionConfig shifted(long d) const;
    // Psi: translate so that the right edge sits at 0.
    InfectionConfig edge_view() const;

    // Indicator string of sites right()-L .. right(), left to right.
    std::string pattern(long L) const;

    bool subset_of(const InfectionConfig& other) const;
    bool operator==(const InfectionConfig& other) const;

    std::string str() const;

private:
    bool bit(long x) const;
    void ensure(long x);

    Fill fill_ = Fill::None;
    long lo_ = 0;
    long width_ = 0;
    long base_ = 0;
    std::vector<std::uint8_t> bits_;
    std::size_t count_ = 0;
    long min_ = 0, max_ = 0;
};

// Psi as a free function.
InfectionConfig edge_view(const InfectionConfig& c);

} // namespace pdl::contact
