#pragma once

#include <cstdint>
#include <vector>

namespace mason {

/// A directed arc u->v, optionally paired with the reverse arc v->u so that
/// symmetric neighbor links share one residual edge pair.
struct Arc {
  int from = 0;
  int to = 0;
  double capacity = 0.0;
  double reverse_capacity = 0.0;
};

/// Capacitated directed graph with distinguished source and sink.
/// Capacities are non-negative; nothing may enter the source or leave the sink.
class FlowNetwork {
 public:
  FlowNetwork(int node_count, int source, int sink);

  /// Adds u->v with the given capacity and returns the arc index.
  int add_arc(int from, int to, double capacity);
  /// Adds u->v and v->u as one pair of residual edges.
  int add_edge_pair(int u, int v, double capacity_uv, double capacity_vu);

  int node_count() const noexcept { return node_count_; }
  int source() const noexcept { return source_; }
  int sink() const noexcept { return sink_; }
  const std::vector<Arc>& arcs() const noexcept { return arcs_; }

  void reserve(std::size_t arc_count) { arcs_.reserve(arc_count); }

 private:
  void check(int from, int to, double cap_forward, double cap_backward) const;

  int node_count_;
  int source_;
  int sink_;
  std::vector<Arc> arcs_;
};

struct CutResult {
  double flow_value = 0.0;
  /// 1 for nodes on the source side of the minimum cut: exactly the nodes
  /// reachable from the source in the final residual graph.
  std::vector<std::uint8_t> source_side;
};

CutResult max_flow_min_cut(const FlowNetwork& network);

}  // namespace mason
