#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kcsm/errors.hpp"

namespace kcsm {

enum class GraphKind { RootedTree, UnrootedTree, Triangle };

/// A finite site topology: rooted k-ary tree of depth L, unrooted tree
/// (a center with k+1 depth-(L-1) subtrees, so every vertex has k+1
/// neighbor slots), or the lattice triangle {x,y >= 0, x+y <= L}.
///
/// Vertices are contiguous ids. Trees are numbered breadth-first from the
/// root/center, the triangle row-major (y rows, x within a row). Immutable
/// after construction and safe to share across threads.
class SiteGraph {
  public:
    static constexpr int64_t default_vertex_cap = int64_t{1} << 31;

    GraphKind kind() const { return kind_; }
    int branching() const { return k_; }
    int depth_limit() const { return depth_limit_; } ///< tree depth / triangle side L
    int num_vertices() const { return static_cast<int>(parent_.size()); }
    int root() const { return 0; }

    int parent(int x) const { return parent_[x]; }
    int depth(int x) const { return depth_[x]; }
    std::span<const int32_t> children(int x) const {
        return {child_ids_.data() + child_off_[x],
                static_cast<size_t>(child_off_[x + 1] - child_off_[x])};
    }
    bool is_leaf(int x) const { return child_off_[x + 1] == child_off_[x]; }

    /// Neighbor slots a vertex would have on the corresponding infinite
    /// graph but that are absent here (a tree leaf's missing children,
    /// the triangle handled separately via north/east).
    int missing_children(int x) const {
        return expected_children(x) - static_cast<int>(children(x).size());
    }
    int expected_children(int x) const {
        if (kind_ == GraphKind::Triangle) return 0;
        return (kind_ == GraphKind::UnrootedTree && x == 0) ? k_ + 1 : k_;
    }

    /// Undirected adjacency (parent + children for trees, in-triangle
    /// lattice neighbors for the triangle).
    std::vector<int> neighbors(int x) const {
        std::vector<int> out;
        if (kind_ == GraphKind::Triangle) {
            auto [cx, cy] = coords_[x];
            for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
                int id = site_id(cx + dx, cy + dy);
                if (id >= 0) out.push_back(id);
            }
            return out;
        }
        if (parent_[x] >= 0) out.push_back(parent_[x]);
        for (int c : children(x)) out.push_back(c);
        return out;
    }

    // --- triangle-specific ---
    std::pair<int, int> coord(int x) const { return coords_[x]; }
    int site_id(int cx, int cy) const {
        if (cx < 0 || cy < 0 || cx + cy > depth_limit_) return -1;
        return row_off_[cy] + cx;
    }
    int north(int x) const { return site_id(coords_[x].first, coords_[x].second + 1); }
    int east(int x) const { return site_id(coords_[x].first + 1, coords_[x].second); }
    /// Hypotenuse sites; their north and east neighbors fall outside.
    bool is_boundary(int x) const {
        return coords_[x].first + coords_[x].second == depth_limit_;
    }

    static SiteGraph rooted_tree(int k, int depth, int64_t vertex_cap = default_vertex_cap);
    static SiteGraph unrooted_tree(int k, int depth, int64_t vertex_cap = default_vertex_cap);
    static SiteGraph triangle(int side, int64_t vertex_cap = default_vertex_cap);
    static SiteGraph build(GraphKind kind, int k, int L, int64_t vertex_cap = default_vertex_cap);

  private:
    GraphKind kind_ = GraphKind::RootedTree;
    int k_ = 0;
    int depth_limit_ = 0;
    std::vector<int32_t> parent_;
    std::vector<int32_t> depth_;
    std::vector<int32_t> child_off_;
    std::vector<int32_t> child_ids_;
    std::vector<std::pair<int16_t, int16_t>> coords_; // triangle only
    std::vector<int32_t> row_off_;                    // triangle only

    void finish_tree_from_parents() {
        const int v = static_cast<int>(parent_.size());
        child_off_.assign(v + 1, 0);
        for (int x = 1; x < v; ++x) ++child_off_[parent_[x] + 1];
        for (int y = 0; y < v; ++y) child_off_[y + 1] += child_off_[y];
        child_ids_.resize(v > 0 ? child_off_[v] : 0);
        std::vector<int32_t> cursor(child_off_.begin(), child_off_.end() - 1);
        for (int x = 1; x < v; ++x) child_ids_[cursor[parent_[x]]++] = x;
    }
};

namespace detail {
inline int64_t tree_vertex_count(int k, int depth) {
    int64_t v = 1, layer = 1;
    for (int d = 0; d < depth; ++d) {
        layer *= k;
        v += layer;
        if (v > (int64_t{1} << 40)) return v; // already absurd, stop growing
    }
    return v;
}
} // namespace detail

inline SiteGraph SiteGraph::rooted_tree(int k, int depth, int64_t vertex_cap) {
    if (k < 1) throw ValidationError("rooted_tree: k must be >= 1");
    if (depth < 0) throw ValidationError("rooted_tree: depth must be >= 0");
    const int64_t v = detail::tree_vertex_count(k, depth);
    if (v > vertex_cap)
        throw ResourceError("rooted_tree: " + std::to_string(v) +
                            " vertices exceeds cap " + std::to_string(vertex_cap));
    SiteGraph g;
    g.kind_ = GraphKind::RootedTree;
    g.k_ = k;
    g.depth_limit_ = depth;
    g.parent_.resize(v);
    g.depth_.resize(v);
    g.parent_[0] = -1;
    g.depth_[0] = 0;
    // breadth-first numbering: children of i occupy k contiguous ids
    int next = 1;
    for (int x = 0; x < v; ++x) {
        if (g.depth_[x] == depth) continue;
        for (int c = 0; c < k; ++c) {
            g.parent_[next] = x;
            g.depth_[next] = g.depth_[x] + 1;
            ++next;
        }
    }
    g.finish_tree_from_parents();
    return g;
}

inline SiteGraph SiteGraph::unrooted_tree(int k, int depth, int64_t vertex_cap) {
    if (k < 1) throw ValidationError("unrooted_tree: k must be >= 1");
    if (depth < 1) throw ValidationError("unrooted_tree: depth must be >= 1");
    const int64_t sub = detail::tree_vertex_count(k, depth - 1);
    const int64_t v = 1 + (k + 1) * sub;
    if (v > vertex_cap)
        throw ResourceError("unrooted_tree: " + std::to_string(v) +
                            " vertices exceeds cap " + std::to_string(vertex_cap));
    SiteGraph g;
    g.kind_ = GraphKind::UnrootedTree;
    g.k_ = k;
    g.depth_limit_ = depth;
    g.parent_.resize(v);
    g.depth_.resize(v);
    g.parent_[0] = -1;
    g.depth_[0] = 0;
    int next = 1;
    for (int x = 0; x < v; ++x) {
        if (g.depth_[x] == depth) continue;
        const int nc = (x == 0) ? k + 1 : k;
        for (int c = 0; c < nc; ++c) {
            g.parent_[next] = x;
            g.depth_[next] = g.depth_[x] + 1;
            ++next;
        }
    }
    g.finish_tree_from_parents();
    return g;
}

inline SiteGraph SiteGraph::triangle(int side, int64_t vertex_cap) {
    if (side < 0) throw ValidationError("triangle: side must be >= 0");
    const int64_t v = int64_t(side + 1) * (side + 2) / 2;
    if (v > vertex_cap)
        throw ResourceError("triangle: " + std::to_string(v) + " vertices exceeds cap " +
                            std::to_string(vertex_cap));
    SiteGraph g;
    g.kind_ = GraphKind::Triangle;
    g.k_ = 0;
    g.depth_limit_ = side;
    g.parent_.assign(v, -1);
    g.depth_.resize(v);
    g.coords_.resize(v);
    g.row_off_.resize(side + 2, 0);
    int id = 0;
    for (int y = 0; y <= side; ++y) {
        g.row_off_[y] = id;
        for (int x = 0; x + y <= side; ++x, ++id) {
            g.coords_[id] = {static_cast<int16_t>(x), static_cast<int16_t>(y)};
            g.depth_[id] = x + y;
        }
    }
    g.row_off_[side + 1] = id;
    g.child_off_.assign(v + 1, 0); // triangles have no tree structure
    return g;
}

inline SiteGraph SiteGraph::build(GraphKind kind, int k, int L, int64_t vertex_cap) {
    switch (kind) {
        case GraphKind::RootedTree: return rooted_tree(k, L, vertex_cap);
        case GraphKind::UnrootedTree: return unrooted_tree(k, L, vertex_cap);
        case GraphKind::Triangle: return triangle(L, vertex_cap);
    }
    throw ValidationError("build: unknown graph kind");
}

} // namespace kcsm
