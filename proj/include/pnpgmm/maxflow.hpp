#pragma once

#include <vector>

namespace pnpgmm {

/// Directed s-t flow network with real capacities. Every arc is stored with a
/// paired reverse arc (capacity 0 unless given), so residual capacities live in
/// the arc list itself.
class FlowNetwork {
 public:
  struct Arc {
    int to;
    int reverse;  // index of the paired arc in arcs(to)
    double capacity;
  };

  FlowNetwork(int nodes, int source, int sink);

  int add_node();
  /// Adds from -> to with `capacity` and to -> from with `reverse_capacity`.
  void add_arc(int from, int to, double capacity, double reverse_capacity = 0.0);

  int nodes() const { return static_cast<int>(adjacency_.size()); }
  int source() const { return source_; }
  int sink() const { return sink_; }
  const std::vector<Arc>& arcs(int node) const { return adjacency_[node]; }

 private:
  friend struct MaxFlowSolver;
  std::vector<std::vector<Arc>> adjacency_;
  int source_;
  int sink_;
};

struct MinCut {
  double flow = 0.0;
  /// source_side[v] is true when v is reachable from the source in the final
  /// residual graph.
  std::vector<bool> source_side;
  /// sink_side[v] is true when the sink is reachable from v in the final
  /// residual graph. Its complement is the largest minimum-cut source set.
  std::vector<bool> sink_side;
};

/// Exact maximum flow by repeated BFS level graphs and blocking flows with
/// per-node current-arc pointers (Dinic). The network is copied; the input is
/// left untouched. Deterministic for a given arc insertion order.
MinCut max_flow_min_cut(const FlowNetwork& network);

/// Sum of the original capacities of arcs leaving the source side.
double cut_capacity(const FlowNetwork& network, const std::vector<bool>& source_side);

}  // namespace pnpgmm
