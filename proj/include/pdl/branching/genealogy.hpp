#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pdl/branching/offspring.hpp"
#include "pdl/kernel/stream.hpp"

namespace pdl::branching {

// Rooted genealogy with alive leaves and dead internal vertices. Vertex ids
// are slots in an internal table and are reused after deletion.
class GenealogyTree {
public:
    using Vertex = std::uint32_t;
    static constexpr Vertex kNone = 0xffffffffu;

    GenealogyTree() = default;
    // The one-vertex tree with a single alive leaf.
    static GenealogyTree single();
    // A dead root with k alive children; child i carries founder id i.
    // founders(1) is the same class as single() after the first death.
    static GenealogyTree founders(std::size_t k);
    // Inverse of canonical_tree(); all vertices get founder id 0.
    static GenealogyTree from_encoding(const std::string& enc);

    bool empty() const { return root_ == kNone; }
    Vertex root() const { return root_; }
    Vertex parent(Vertex v) const { return nodes_[v].parent; }
    const std::vector<Vertex>& children(Vertex v) const { return nodes_[v].children; }
    bool alive(Vertex v) const { return nodes_[v].alive; }
    std::uint32_t founder(Vertex v) const { return nodes_[v].founder; }
    const std::vector<Vertex>& alive_leaves() const { return leaves_; }
    std::size_t vertex_count() const { return count_; }
    // Number of distinct founder ids among alive leaves.
    std::size_t founders_alive() const;

    // Alive leaf v reproduces with z >= 1 children: v turns dead and the
    // children become alive leaves inheriting its founder id. Returns the
    // first child; the others follow in children(v).
    Vertex branch(Vertex v, std::size_t z);
    // Alive leaf v dies with no children, followed by pruning.
    void kill(Vertex v);

    // Throws InvariantViolation unless every vertex has an alive
    // descendant, alive vertices are exactly the alive leaves and the root
    // is the most recent common ancestor of the alive leaves.
    void check_invariants() const;

    bool operator==(const GenealogyTree& o) const;

private:
    struct Node {
        Vertex parent = kNone;
        std::vector<Vertex> children;
        bool alive = false;
        bool used = false;
        std::uint32_t founder = 0;
        std::uint32_t leaf_pos = 0;
    };

    Vertex make(Vertex parent, bool alive, std::uint32_t founder);
    void drop(Vertex v);
    void detach(Vertex v);

    std::vector<Node> nodes_;
    std::vector<Vertex> free_;
    std::vector<Vertex> leaves_;
    Vertex root_ = kNone;
    std::size_t count_ = 0;
};

// Death of `dying` with pruning: its dead ancestors left without children
// are removed, then the root moves down to the most recent common ancestor
// of the remaining alive leaves. Dead chains below that ancestor stay.
GenealogyTree prune(GenealogyTree tree, GenealogyTree::Vertex dying);

struct TreeStats {
    std::size_t alive = 0;
    std::size_t diameter = 0;
};
TreeStats tree_stats(const GenealogyTree& tree);

// Root-preserving isomorphism class: "(a)" is an alive leaf, a dead vertex
// is "(d" followed by its sorted child encodings and ")", and the empty tree
// is "E".
std::string canonical_tree(const GenealogyTree& tree);

enum class Tilt {
    None,
    // One distinguished line overall (single founder).
    Spine,
    // One distinguished line per founder.
    SpinePerFounder,
};

struct GenealogyOptions {
    Tilt tilt = Tilt::None;
    bool check_invariants = false;
    // Called after every event with the current time.
    std::function<void(double, const GenealogyTree&)> observer;
};

// Runs the genealogy process up to time t. Under a spine tilt the
// distinguished leaves reproduce at rate m with the size-biased law and the
// mark passes to a uniform child.
GenealogyTree evolve_genealogy(GenealogyTree tree, const OffspringDist& dist, kernel::Stream& s, double t,
                               const GenealogyOptions& opts = {});

} // namespace pdl::branching
