#include "mason/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "mason/common.hpp"

namespace mason {

FlowNetwork::FlowNetwork(int node_count, int source, int sink)
    : node_count_(node_count), source_(source), sink_(sink) {
  if (node_count < 2 || source < 0 || sink < 0 || source >= node_count || sink >= node_count || source == sink) {
    throw Error(ErrorCode::InvalidArgument, "flow network needs distinct source and sink nodes");
  }
}

void FlowNetwork::check(int from, int to, double cap_forward, double cap_backward) const {
  if (from < 0 || to < 0 || from >= node_count_ || to >= node_count_ || from == to) {
    throw Error(ErrorCode::InvalidArgument, "arc endpoints out of range");
  }
  if (!(cap_forward >= 0.0) || !(cap_backward >= 0.0) || !std::isfinite(cap_forward) || !std::isfinite(cap_backward)) {
    throw Error(ErrorCode::InvalidArgument, "arc capacities must be finite and non-negative");
  }
  auto forbidden = [&](int u, int v, double c) { return c > 0.0 && (v == source_ || u == sink_); };
  if (forbidden(from, to, cap_forward) || forbidden(to, from, cap_backward)) {
    throw Error(ErrorCode::InvalidArgument, "arcs may not enter the source or leave the sink");
  }
}

int FlowNetwork::add_arc(int from, int to, double capacity) { return add_edge_pair(from, to, capacity, 0.0); }

int FlowNetwork::add_edge_pair(int u, int v, double capacity_uv, double capacity_vu) {
  check(u, v, capacity_uv, capacity_vu);
  arcs_.push_back({u, v, capacity_uv, capacity_vu});
  return static_cast<int>(arcs_.size()) - 1;
}

namespace {

// Boykov-Kolmogorov max-flow: two search trees grown from the terminals, with
// augmentation along the joining path and orphan adoption afterwards.
class BkSolver {
 public:
  explicit BkSolver(const FlowNetwork& net)
      : n_(net.node_count()), source_(net.source()), sink_(net.sink()) {
    const auto& arcs = net.arcs();
    head_.resize(arcs.size() * 2);
    cap_.resize(arcs.size() * 2);
    std::vector<int> degree(static_cast<std::size_t>(n_) + 1, 0);
    for (std::size_t i = 0; i < arcs.size(); ++i) {
      head_[2 * i] = arcs[i].to;
      head_[2 * i + 1] = arcs[i].from;
      cap_[2 * i] = arcs[i].capacity;
      cap_[2 * i + 1] = arcs[i].reverse_capacity;
      ++degree[static_cast<std::size_t>(arcs[i].from) + 1];
      ++degree[static_cast<std::size_t>(arcs[i].to) + 1];
    }
    first_.assign(static_cast<std::size_t>(n_) + 1, 0);
    for (int v = 0; v < n_; ++v) first_[v + 1] = first_[v] + degree[static_cast<std::size_t>(v) + 1];
    adj_.resize(arcs.size() * 2);
    std::vector<int> fill(first_.begin(), first_.end() - 1);
    for (std::size_t i = 0; i < arcs.size(); ++i) {
      adj_[static_cast<std::size_t>(fill[arcs[i].from]++)] = static_cast<int>(2 * i);
      adj_[static_cast<std::size_t>(fill[arcs[i].to]++)] = static_cast<int>(2 * i + 1);
    }
    tree_.assign(static_cast<std::size_t>(n_), kFree);
    parent_.assign(static_cast<std::size_t>(n_), kNone);
    ts_.assign(static_cast<std::size_t>(n_), 0);
    dist_.assign(static_cast<std::size_t>(n_), 0);
    in_queue_.assign(static_cast<std::size_t>(n_), 0);
  }

  CutResult solve() {
    tree_[source_] = kSourceTree;
    parent_[source_] = kTerminal;
    tree_[sink_] = kSinkTree;
    parent_[sink_] = kTerminal;
    activate(source_);
    activate(sink_);

    double flow = 0.0;
    for (;;) {
      const int bridge = grow();
      if (bridge < 0) break;
      ++time_;
      flow += augment(bridge);
      adopt();
    }
    return {flow, reachable_from_source()};
  }

 private:
  static constexpr std::uint8_t kFree = 0;
  static constexpr std::uint8_t kSourceTree = 1;
  static constexpr std::uint8_t kSinkTree = 2;
  static constexpr int kNone = -1;
  static constexpr int kTerminal = -2;
  static constexpr int kOrphan = -3;
  static constexpr long kInfDist = std::numeric_limits<long>::max();

  static int sister(int e) { return e ^ 1; }

  void activate(int v) {
    if (!in_queue_[v]) {
      in_queue_[v] = 1;
      active_.push_back(v);
    }
  }

  // Residual capacity usable for growing tree t across edge e (which leaves a
  // node of that tree): outward for the source tree, inward for the sink tree.
  double tree_residual(std::uint8_t t, int e) const { return t == kSourceTree ? cap_[e] : cap_[sister(e)]; }

  // Returns an edge going from a source-tree node to a sink-tree node, or -1.
  int grow() {
    while (!active_.empty()) {
      const int p = active_.front();
      const std::uint8_t tp = tree_[p];
      if (tp == kFree) {
        active_.pop_front();
        in_queue_[p] = 0;
        continue;
      }
      for (int k = first_[p]; k < first_[p + 1]; ++k) {
        const int e = adj_[k];
        if (!(tree_residual(tp, e) > 0.0)) continue;
        const int q = head_[e];
        if (tree_[q] == kFree) {
          tree_[q] = tp;
          parent_[q] = sister(e);
          ts_[q] = ts_[p];
          dist_[q] = dist_[p] + 1;
          activate(q);
        } else if (tree_[q] != tp) {
          return tp == kSourceTree ? e : sister(e);
        } else if (ts_[q] <= ts_[p] && dist_[q] > dist_[p]) {
          parent_[q] = sister(e);
          ts_[q] = ts_[p];
          dist_[q] = dist_[p] + 1;
        }
      }
      active_.pop_front();
      in_queue_[p] = 0;
    }
    return -1;
  }

  double augment(int bridge) {
    const int a = head_[sister(bridge)];
    const int b = head_[bridge];
    double f = cap_[bridge];
    for (int x = a; parent_[x] != kTerminal; x = head_[parent_[x]]) f = std::min(f, cap_[sister(parent_[x])]);
    for (int x = b; parent_[x] != kTerminal; x = head_[parent_[x]]) f = std::min(f, cap_[parent_[x]]);

    cap_[bridge] -= f;
    cap_[sister(bridge)] += f;
    for (int x = a; parent_[x] != kTerminal;) {
      const int pe = parent_[x];
      const int next = head_[pe];
      cap_[sister(pe)] -= f;
      cap_[pe] += f;
      if (cap_[sister(pe)] == 0.0) {
        parent_[x] = kOrphan;
        orphans_.push_back(x);
      }
      x = next;
    }
    for (int x = b; parent_[x] != kTerminal;) {
      const int pe = parent_[x];
      const int next = head_[pe];
      cap_[pe] -= f;
      cap_[sister(pe)] += f;
      if (cap_[pe] == 0.0) {
        parent_[x] = kOrphan;
        orphans_.push_back(x);
      }
      x = next;
    }
    return f;
  }

  // Distance from v to its tree root, or kInfDist when the chain hits an orphan.
  // Marks every node on a valid chain with the current timestamp.
  long origin_distance(int v) {
    long d = 0;
    int j = v;
    for (;;) {
      if (ts_[j] == time_) {
        d += dist_[j];
        break;
      }
      const int pe = parent_[j];
      if (pe == kTerminal) {
        ts_[j] = time_;
        dist_[j] = 0;
        break;
      }
      if (pe < 0) return kInfDist;
      ++d;
      j = head_[pe];
    }
    long mark = d;
    for (j = v; ts_[j] != time_; j = head_[parent_[j]]) {
      ts_[j] = time_;
      dist_[j] = mark--;
    }
    return d;
  }

  void adopt() {
    while (!orphans_.empty()) {
      const int x = orphans_.front();
      orphans_.pop_front();
      const std::uint8_t tx = tree_[x];
      int best = kNone;
      long best_d = kInfDist;
      for (int k = first_[x]; k < first_[x + 1]; ++k) {
        const int e = adj_[k];
        const int q = head_[e];
        if (tree_[q] != tx) continue;
        // Flow must be able to run parent -> x (source tree) or x -> parent (sink tree).
        const double r = tx == kSourceTree ? cap_[sister(e)] : cap_[e];
        if (!(r > 0.0)) continue;
        const long d = origin_distance(q);
        if (d < best_d) {
          best_d = d;
          best = e;
        }
      }
      if (best != kNone) {
        parent_[x] = best;
        ts_[x] = time_;
        dist_[x] = best_d + 1;
        continue;
      }
      for (int k = first_[x]; k < first_[x + 1]; ++k) {
        const int e = adj_[k];
        const int q = head_[e];
        if (tree_[q] != tx) continue;
        const double r = tx == kSourceTree ? cap_[sister(e)] : cap_[e];
        if (r > 0.0) activate(q);
        const int pe = parent_[q];
        if (pe >= 0 && head_[pe] == x) {
          parent_[q] = kOrphan;
          orphans_.push_back(q);
        }
      }
      tree_[x] = kFree;
      parent_[x] = kNone;
    }
  }

  std::vector<std::uint8_t> reachable_from_source() const {
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(n_), 0);
    std::vector<int> stack{source_};
    seen[source_] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int k = first_[v]; k < first_[v + 1]; ++k) {
        const int e = adj_[k];
        const int q = head_[e];
        if (!seen[q] && cap_[e] > 0.0) {
          seen[q] = 1;
          stack.push_back(q);
        }
      }
    }
    return seen;
  }

  int n_;
  int source_;
  int sink_;
  std::vector<int> head_;
  std::vector<double> cap_;
  std::vector<int> first_;
  std::vector<int> adj_;

  std::vector<std::uint8_t> tree_;
  std::vector<int> parent_;
  std::vector<long> ts_;
  std::vector<long> dist_;
  std::vector<std::uint8_t> in_queue_;
  std::deque<int> active_;
  std::deque<int> orphans_;
  long time_ = 0;
};

}  // namespace

CutResult max_flow_min_cut(const FlowNetwork& network) { return BkSolver(network).solve(); }

}  // namespace mason
