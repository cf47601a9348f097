#include <algorithm>
#include <cmath>
#include <numeric>

#include "adsala/error.hpp"
#include "adsala/models.hpp"
#include "adsala/rng.hpp"

namespace adsala {

double Tree::predict(const double* x) const {
    int idx = 0;
    while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
        const TreeNode& node = nodes[static_cast<std::size_t>(idx)];
        idx = x[node.feature] <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(idx)].value;
}

namespace detail {

namespace {

struct NodeStats {
    long long w = 0;
    double sum = 0.0;
    double sumsq = 0.0;
};

double node_sse(const NodeStats& s) {
    if (s.w == 0) return 0.0;
    return std::max(0.0, s.sumsq - s.sum * s.sum / static_cast<double>(s.w));
}

struct GrowNode {
    NodeStats stats;
    int depth = 0;
    std::uint64_t fmask = ~0ull;
    bool frontier = false;
    // split under construction
    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    // final structure
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
};

// Running left-side accumulator while sweeping one feature through one node.
struct Sweep {
    NodeStats left;
    double prev = 0.0;
    bool any = false;
};

std::uint64_t sample_feature_mask(int d, int max_features, Rng& rng) {
    if (max_features <= 0 || max_features >= d) return ~0ull;
    std::vector<int> cols(static_cast<std::size_t>(d));
    std::iota(cols.begin(), cols.end(), 0);
    rng.shuffle(cols);
    std::uint64_t mask = 0;
    for (int i = 0; i < max_features; ++i) mask |= 1ull << cols[static_cast<std::size_t>(i)];
    return mask;
}

} // namespace

Tree grow_tree(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
               const std::vector<int>& row_weights, const TreeGrowSpec& spec) {
    const int n = static_cast<int>(X.size());
    if (n == 0 || y.size() != X.size() || row_weights.size() != X.size())
        throw ContractError("grow_tree: inconsistent inputs");
    const int d = static_cast<int>(X[0].size());
    if (d < 1) throw ContractError("grow_tree: no features");
    const bool subsample = spec.max_features > 0 && spec.max_features < d;
    if (subsample && d > 64)
        throw ParamError("feature subsampling supports at most 64 features");
    const int max_depth = spec.max_depth <= 0 ? 64 : spec.max_depth;
    const long long msl = std::max(1, spec.min_samples_leaf);

    std::vector<int> active;
    for (int i = 0; i < n; ++i)
        if (row_weights[static_cast<std::size_t>(i)] > 0) active.push_back(i);
    if (active.empty()) throw ContractError("grow_tree: all row weights are zero");

    // One sort per feature over the active rows; reused by every level.
    std::vector<std::vector<int>> sorted(static_cast<std::size_t>(d), active);
    for (int f = 0; f < d; ++f)
        std::stable_sort(sorted[static_cast<std::size_t>(f)].begin(),
                         sorted[static_cast<std::size_t>(f)].end(), [&](int a, int b) {
                             return X[static_cast<std::size_t>(a)][static_cast<std::size_t>(f)] <
                                    X[static_cast<std::size_t>(b)][static_cast<std::size_t>(f)];
                         });

    Rng mask_rng(derive_seed(spec.seed, 0x7265657367726f77ull));
    std::vector<GrowNode> nodes(1);
    std::vector<int> row_node(static_cast<std::size_t>(n), -1);
    for (int i : active) {
        const auto w = static_cast<long long>(row_weights[static_cast<std::size_t>(i)]);
        const double yi = y[static_cast<std::size_t>(i)];
        nodes[0].stats.w += w;
        nodes[0].stats.sum += static_cast<double>(w) * yi;
        nodes[0].stats.sumsq += static_cast<double>(w) * yi * yi;
        row_node[static_cast<std::size_t>(i)] = 0;
    }
    nodes[0].fmask = sample_feature_mask(d, spec.max_features, mask_rng);
    nodes[0].frontier = nodes[0].stats.w >= 2 * msl && node_sse(nodes[0].stats) > 1e-12;

    std::vector<int> frontier;
    if (nodes[0].frontier) frontier.push_back(0);

    for (int depth = 0; depth < max_depth && !frontier.empty(); ++depth) {
        std::vector<Sweep> sweep(nodes.size());
        for (int f = 0; f < d; ++f) {
            for (int nid : frontier) sweep[static_cast<std::size_t>(nid)] = Sweep{};
            const std::uint64_t fbit = 1ull << f;
            for (int i : sorted[static_cast<std::size_t>(f)]) {
                const int nid = row_node[static_cast<std::size_t>(i)];
                if (nid < 0 || !nodes[static_cast<std::size_t>(nid)].frontier) continue;
                GrowNode& node = nodes[static_cast<std::size_t>(nid)];
                if (!(node.fmask & fbit)) continue;
                Sweep& s = sweep[static_cast<std::size_t>(nid)];
                const double v = X[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)];
                if (s.any && v > s.prev) {
                    const long long wl = s.left.w;
                    const long long wr = node.stats.w - wl;
                    if (wl >= msl && wr >= msl) {
                        NodeStats right{wr, node.stats.sum - s.left.sum,
                                        node.stats.sumsq - s.left.sumsq};
                        const double gain =
                            node_sse(node.stats) - node_sse(s.left) - node_sse(right);
                        if (gain > node.best_gain && gain > 1e-12) {
                            node.best_gain = gain;
                            node.best_feature = f;
                            node.best_threshold = 0.5 * (s.prev + v);
                        }
                    }
                }
                const auto w = static_cast<long long>(row_weights[static_cast<std::size_t>(i)]);
                const double yi = y[static_cast<std::size_t>(i)];
                s.left.w += w;
                s.left.sum += static_cast<double>(w) * yi;
                s.left.sumsq += static_cast<double>(w) * yi * yi;
                s.prev = v;
                s.any = true;
            }
        }

        std::vector<int> splitters;
        for (int nid : frontier) {
            GrowNode& node = nodes[static_cast<std::size_t>(nid)];
            node.frontier = false;
            if (node.best_feature < 0) continue;
            node.feature = node.best_feature;
            node.threshold = node.best_threshold;
            node.left = static_cast<int>(nodes.size());
            node.right = node.left + 1;
            nodes.emplace_back();
            nodes.emplace_back();
            nodes[static_cast<std::size_t>(node.left)].depth = depth + 1;
            nodes[static_cast<std::size_t>(node.right)].depth = depth + 1;
            splitters.push_back(nid);
        }
        if (splitters.empty()) break;

        for (int i : active) {
            const int nid = row_node[static_cast<std::size_t>(i)];
            if (nid < 0) continue;
            const GrowNode& node = nodes[static_cast<std::size_t>(nid)];
            if (node.feature < 0) continue;
            const int child =
                X[static_cast<std::size_t>(i)][static_cast<std::size_t>(node.feature)] <=
                        node.threshold
                    ? node.left
                    : node.right;
            row_node[static_cast<std::size_t>(i)] = child;
            GrowNode& c = nodes[static_cast<std::size_t>(child)];
            const auto w = static_cast<long long>(row_weights[static_cast<std::size_t>(i)]);
            const double yi = y[static_cast<std::size_t>(i)];
            c.stats.w += w;
            c.stats.sum += static_cast<double>(w) * yi;
            c.stats.sumsq += static_cast<double>(w) * yi * yi;
        }

        frontier.clear();
        for (int nid : splitters) {
            for (int child : {nodes[static_cast<std::size_t>(nid)].left,
                              nodes[static_cast<std::size_t>(nid)].right}) {
                GrowNode& c = nodes[static_cast<std::size_t>(child)];
                c.fmask = sample_feature_mask(d, spec.max_features, mask_rng);
                if (c.depth < max_depth && c.stats.w >= 2 * msl &&
                    node_sse(c.stats) > 1e-12) {
                    c.frontier = true;
                    frontier.push_back(child);
                }
            }
        }
    }

    // Flatten to a preorder node list.
    Tree tree;
    tree.nodes.reserve(nodes.size());
    std::vector<std::pair<int, int>> stack{{0, -1}}; // (grow index, parent slot)
    while (!stack.empty()) {
        auto [gid, slot] = stack.back();
        stack.pop_back();
        const GrowNode& g = nodes[static_cast<std::size_t>(gid)];
        const int out = static_cast<int>(tree.nodes.size());
        if (slot >= 0) {
            TreeNode& parent = tree.nodes[static_cast<std::size_t>(slot / 2)];
            (slot % 2 == 0 ? parent.left : parent.right) = out;
        }
        TreeNode tn;
        tn.feature = g.feature;
        tn.threshold = g.threshold;
        tn.value = g.stats.w ? g.stats.sum / static_cast<double>(g.stats.w) : 0.0;
        tree.nodes.push_back(tn);
        if (g.feature >= 0) {
            // push right first so the left subtree is emitted immediately after.
            stack.emplace_back(g.right, out * 2 + 1);
            stack.emplace_back(g.left, out * 2);
        }
    }
    return tree;
}

} // namespace detail

} // namespace adsala
