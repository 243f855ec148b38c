#include "pdl/branching/genealogy.hpp"

#include <algorithm>
#include <set>

#include "pdl/kernel/errors.hpp"

namespace pdl::branching {

using Vertex = GenealogyTree::Vertex;

GenealogyTree GenealogyTree::single() {
    GenealogyTree t;
    t.root_ = t.make(kNone, true, 0);
    return t;
}

GenealogyTree GenealogyTree::founders(std::size_t k) {
    if (k == 0) return GenealogyTree{};
    if (k == 1) return single();
    GenealogyTree t;
    t.root_ = t.make(kNone, false, 0);
    for (std::size_t i = 0; i < k; ++i) t.make(t.root_, true, static_cast<std::uint32_t>(i));
    return t;
}

namespace {

// Recursive descent over "(a)" / "(d...)" / "E".
struct Parser {
    const std::string& s;
    std::size_t i = 0;

    [[noreturn]] void fail() const {
        throw ParameterError("tree encoding: malformed at offset " + std::to_string(i) + " in '" + s + "'");
    }
    void expect(char c) {
        if (i >= s.size() || s[i] != c) fail();
        ++i;
    }
};

} // namespace

GenealogyTree GenealogyTree::from_encoding(const std::string& enc) {
    GenealogyTree t;
    if (enc == "E") return t;
    Parser p{enc};
    // Explicit stack of open dead vertices.
    std::vector<Vertex> open;
    do {
        p.expect('(');
        if (p.i >= enc.size()) p.fail();
        const Vertex parent = open.empty() ? kNone : open.back();
        if (parent == kNone && t.root_ != kNone) p.fail();
        if (enc[p.i] == 'a') {
            ++p.i;
            p.expect(')');
            const Vertex v = t.make(parent, true, 0);
            if (parent == kNone) t.root_ = v;
        } else if (enc[p.i] == 'd') {
            ++p.i;
            const Vertex v = t.make(parent, false, 0);
            if (parent == kNone) t.root_ = v;
            open.push_back(v);
        } else {
            p.fail();
        }
        while (!open.empty() && p.i < enc.size() && enc[p.i] == ')') {
            if (t.nodes_[open.back()].children.empty()) p.fail();
            open.pop_back();
            ++p.i;
        }
    } while (!open.empty());
    if (p.i != enc.size()) p.fail();
    return t;
}

Vertex GenealogyTree::make(Vertex parent, bool alive, std::uint32_t founder) {
    Vertex v;
    if (!free_.empty()) {
        v = free_.back();
        free_.pop_back();
    } else {
        v = static_cast<Vertex>(nodes_.size());
        nodes_.emplace_back();
    }
    Node& n = nodes_[v];
    n.parent = parent;
    n.children.clear();
    n.alive = alive;
    n.used = true;
    n.founder = founder;
    if (alive) {
        n.leaf_pos = static_cast<std::uint32_t>(leaves_.size());
        leaves_.push_back(v);
    }
    if (parent != kNone) nodes_[parent].children.push_back(v);
    ++count_;
    return v;
}

void GenealogyTree::drop(Vertex v) {
    Node& n = nodes_[v];
    if (n.alive) {
        const Vertex last = leaves_.back();
        leaves_[n.leaf_pos] = last;
        nodes_[last].leaf_pos = n.leaf_pos;
        leaves_.pop_back();
        n.alive = false;
    }
    n.used = false;
    n.children.clear();
    n.parent = kNone;
    free_.push_back(v);
    --count_;
}

void GenealogyTree::detach(Vertex v) {
    const Vertex p = nodes_[v].parent;
    if (p == kNone) return;
    auto& ch = nodes_[p].children;
    ch.erase(std::find(ch.begin(), ch.end(), v));
}

std::size_t GenealogyTree::founders_alive() const {
    if (leaves_.empty()) return 0;
    const std::uint32_t f0 = nodes_[leaves_[0]].founder;
    std::set<std::uint32_t> seen;
    for (Vertex v : leaves_) {
        if (nodes_[v].founder != f0) seen.insert(nodes_[v].founder);
    }
    return 1 + seen.size();
}

Vertex GenealogyTree::branch(Vertex v, std::size_t z) {
    if (v >= nodes_.size() || !nodes_[v].used || !nodes_[v].alive)
        throw ParameterError("branch: vertex is not an alive leaf");
    if (z == 0) throw ParameterError("branch: use kill() for zero offspring");
    Node& n = nodes_[v];
    const Vertex last = leaves_.back();
    leaves_[n.leaf_pos] = last;
    nodes_[last].leaf_pos = n.leaf_pos;
    leaves_.pop_back();
    n.alive = false;
    const std::uint32_t f = n.founder;
    const Vertex first = make(v, true, f);
    for (std::size_t i = 1; i < z; ++i) make(v, true, f);
    return first;
}

void GenealogyTree::kill(Vertex v) {
    if (v >= nodes_.size() || !nodes_[v].used || !nodes_[v].alive)
        throw ParameterError("kill: vertex is not an alive leaf");
    Vertex p = nodes_[v].parent;
    detach(v);
    drop(v);
    while (p != kNone && nodes_[p].children.empty()) {
        const Vertex q = nodes_[p].parent;
        detach(p);
        drop(p);
        p = q;
    }
    if (count_ == 0) {
        *this = GenealogyTree{};
        return;
    }
    Vertex r = root_;
    while (nodes_[r].children.size() == 1) r = nodes_[r].children[0];
    if (r != root_) {
        Vertex c = root_;
        while (c != r) {
            const Vertex next = nodes_[c].children[0];
            drop(c);
            c = next;
        }
        nodes_[r].parent = kNone;
        root_ = r;
    }
}

void GenealogyTree::check_invariants() const {
    auto fail = [&](const std::string& what) { throw InvariantViolation("genealogy: " + what, canonical_tree(*this)); };
    if (root_ == kNone) {
        if (count_ != 0 || !leaves_.empty()) fail("empty tree with vertices");
        return;
    }
    if (nodes_[root_].parent != kNone) fail("root has a parent");
    // Post-order over the tree, counting reachable vertices and alive leaves below each.
    std::vector<std::size_t> below(nodes_.size(), 0);
    std::vector<Vertex> order{root_};
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Vertex v = order[i];
        if (!nodes_[v].used) fail("dangling vertex");
        if (nodes_[v].alive && !nodes_[v].children.empty()) fail("alive vertex with children");
        if (!nodes_[v].alive && nodes_[v].children.empty()) fail("dead leaf");
        for (Vertex c : nodes_[v].children) {
            if (nodes_[c].parent != v) fail("parent link mismatch");
            order.push_back(c);
        }
    }
    if (order.size() != count_) fail("unreachable vertices");
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const Vertex v = *it;
        if (nodes_[v].alive) below[v] = 1;
        if (below[v] == 0) fail("vertex without alive descendant");
        if (nodes_[v].parent != kNone) below[nodes_[v].parent] += below[v];
    }
    if (below[root_] != leaves_.size()) fail("alive leaf list out of sync");
    if (!nodes_[root_].alive && nodes_[root_].children.size() < 2) fail("root is not the most recent common ancestor");
}

bool GenealogyTree::operator==(const GenealogyTree& o) const {
    return canonical_tree(*this) == canonical_tree(o);
}

GenealogyTree prune(GenealogyTree tree, Vertex dying) {
    tree.kill(dying);
    return tree;
}

TreeStats tree_stats(const GenealogyTree& tree) {
    TreeStats st;
    if (tree.empty()) return st;
    st.alive = tree.alive_leaves().size();
    std::vector<Vertex> order{tree.root()};
    for (std::size_t i = 0; i < order.size(); ++i)
        for (Vertex c : tree.children(order[i])) order.push_back(c);
    Vertex max_id = 0;
    for (Vertex v : order) max_id = std::max(max_id, v);
    std::vector<std::size_t> height(max_id + 1, 0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        std::size_t h1 = 0, h2 = 0;
        std::size_t n = 0;
        for (Vertex c : tree.children(*it)) {
            const std::size_t h = height[c] + 1;
            ++n;
            if (h > h1) {
                h2 = h1;
                h1 = h;
            } else if (h > h2) {
                h2 = h;
            }
        }
        height[*it] = h1;
        st.diameter = std::max(st.diameter, n >= 2 ? h1 + h2 : h1);
    }
    return st;
}

std::string canonical_tree(const GenealogyTree& tree) {
    if (tree.empty()) return "E";
    std::vector<Vertex> order{tree.root()};
    for (std::size_t i = 0; i < order.size(); ++i)
        for (Vertex c : tree.children(order[i])) order.push_back(c);
    Vertex max_id = 0;
    for (Vertex v : order) max_id = std::max(max_id, v);
    std::vector<std::string> enc(max_id + 1);
    std::vector<std::string> parts;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const Vertex v = *it;
        if (tree.alive(v)) {
            enc[v] = "(a)";
            continue;
        }
        parts.clear();
        for (Vertex c : tree.children(v)) parts.push_back(std::move(enc[c]));
        std::sort(parts.begin(), parts.end());
        std::string s = "(d";
        for (auto& p : parts) s += p;
        s += ')';
        enc[v] = std::move(s);
    }
    return enc[tree.root()];
}

GenealogyTree evolve_genealogy(GenealogyTree tree, const OffspringDist& dist, kernel::Stream& s, double t,
                               const GenealogyOptions& opts) {
    std::vector<char> spine;
    OffspringDist biased;
    double spine_rate = 0;
    if (opts.tilt != Tilt::None && !tree.empty()) {
        if (!dist.subcritical() || dist.mean() <= 0)
            throw ParameterError("evolve_genealogy: spine tilt needs 0 < m < 1");
        biased = dist.size_biased();
        spine_rate = dist.mean();
        std::set<std::uint32_t> marked;
        for (Vertex v : tree.alive_leaves()) {
            const std::uint32_t f = opts.tilt == Tilt::Spine ? 0 : tree.founder(v);
            if (!marked.insert(f).second) continue;
            if (spine.size() <= v) spine.resize(v + 1, 0);
            spine[v] = 1;
        }
    }
    double now = 0;
    while (!tree.empty()) {
        // Every leaf rings at rate 1; distinguished leaves accept with
        // probability m < 1 (thinning).
        const auto n = tree.alive_leaves().size();
        now += kernel::sample_exponential(s, static_cast<double>(n));
        if (now > t) break;
        const Vertex v = tree.alive_leaves()[s.uniform_index(n)];
        const bool marked = v < spine.size() && spine[v];
        if (marked) {
            if (!s.bernoulli(spine_rate)) continue;
            const std::size_t z = biased.sample(s);
            spine[v] = 0;
            tree.branch(v, z);
            const auto& kids = tree.children(v);
            const Vertex heir = kids[s.uniform_index(kids.size())];
            if (spine.size() <= heir) spine.resize(heir + 1, 0);
            spine[heir] = 1;
        } else {
            const std::size_t z = dist.sample(s);
            if (z == 0) {
                tree.kill(v);
                if (opts.check_invariants) tree.check_invariants();
            } else {
                tree.branch(v, z);
            }
        }
        if (opts.observer) opts.observer(now, tree);
    }
    return tree;
}

} // namespace pdl::branching
