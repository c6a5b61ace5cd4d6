#include "pnpgmm/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pnpgmm/errors.hpp"

namespace pnpgmm {

FlowNetwork::FlowNetwork(int nodes, int source, int sink)
    : adjacency_(static_cast<std::size_t>(std::max(nodes, 0))), source_(source), sink_(sink) {
  if (nodes < 2) throw ArgumentError("flow network needs at least two nodes");
  if (source < 0 || source >= nodes || sink < 0 || sink >= nodes || source == sink) {
    throw ArgumentError("invalid source/sink pair");
  }
}

int FlowNetwork::add_node() {
  adjacency_.emplace_back();
  return nodes() - 1;
}

void FlowNetwork::add_arc(int from, int to, double capacity, double reverse_capacity) {
  if (from < 0 || from >= nodes() || to < 0 || to >= nodes() || from == to) {
    throw ArgumentError("arc endpoints out of range: " + std::to_string(from) + " -> " +
                        std::to_string(to));
  }
  if (!(capacity >= 0.0) || !(reverse_capacity >= 0.0) || !std::isfinite(capacity) ||
      !std::isfinite(reverse_capacity)) {
    throw ArgumentError("arc capacities must be finite and non-negative");
  }
  auto& out = adjacency_[static_cast<std::size_t>(from)];
  auto& in = adjacency_[static_cast<std::size_t>(to)];
  out.push_back({to, static_cast<int>(in.size()), capacity});
  in.push_back({from, static_cast<int>(out.size()) - 1, reverse_capacity});
}

struct MaxFlowSolver {
  std::vector<std::vector<FlowNetwork::Arc>> residual;
  std::vector<int> level;
  std::vector<std::size_t> current;
  int source;
  int sink;

  explicit MaxFlowSolver(const FlowNetwork& net)
      : residual(net.adjacency_),
        level(net.adjacency_.size()),
        current(net.adjacency_.size()),
        source(net.source_),
        sink(net.sink_) {}

  bool build_levels() {
    std::fill(level.begin(), level.end(), -1);
    std::vector<int> queue;
    queue.reserve(level.size());
    queue.push_back(source);
    level[static_cast<std::size_t>(source)] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int u = queue[head];
      for (const auto& arc : residual[static_cast<std::size_t>(u)]) {
        if (arc.capacity > 0.0 && level[static_cast<std::size_t>(arc.to)] < 0) {
          level[static_cast<std::size_t>(arc.to)] = level[static_cast<std::size_t>(u)] + 1;
          queue.push_back(arc.to);
        }
      }
    }
    return level[static_cast<std::size_t>(sink)] >= 0;
  }

  // Blocking flow on the level graph with an explicit path stack.
  double blocking_flow() {
    std::fill(current.begin(), current.end(), 0);
    double total = 0.0;
    std::vector<int> path_nodes{source};
    std::vector<FlowNetwork::Arc*> path_arcs;
    while (!path_nodes.empty()) {
      const int u = path_nodes.back();
      if (u == sink) {
        double push = std::numeric_limits<double>::infinity();
        for (auto* arc : path_arcs) push = std::min(push, arc->capacity);
        std::size_t retreat = path_arcs.size();
        for (std::size_t i = 0; i < path_arcs.size(); ++i) {
          FlowNetwork::Arc* arc = path_arcs[i];
          arc->capacity -= push;
          residual[static_cast<std::size_t>(arc->to)][static_cast<std::size_t>(arc->reverse)]
              .capacity += push;
          if (arc->capacity <= 0.0 && retreat == path_arcs.size()) retreat = i;
        }
        total += push;
        path_nodes.resize(retreat + 1);
        path_arcs.resize(retreat);
        continue;
      }
      auto& arcs = residual[static_cast<std::size_t>(u)];
      std::size_t& it = current[static_cast<std::size_t>(u)];
      bool advanced = false;
      for (; it < arcs.size(); ++it) {
        FlowNetwork::Arc& arc = arcs[it];
        if (arc.capacity > 0.0 &&
            level[static_cast<std::size_t>(arc.to)] == level[static_cast<std::size_t>(u)] + 1) {
          path_arcs.push_back(&arc);
          path_nodes.push_back(arc.to);
          advanced = true;
          break;
        }
      }
      if (!advanced) {
        level[static_cast<std::size_t>(u)] = -1;  // dead end for this phase
        path_nodes.pop_back();
        if (!path_arcs.empty()) {
          path_arcs.pop_back();
          ++current[static_cast<std::size_t>(path_nodes.back())];
        }
      }
    }
    return total;
  }

  std::vector<bool> reachable_from_source() const {
    std::vector<bool> seen(residual.size(), false);
    std::vector<int> stack{source};
    seen[static_cast<std::size_t>(source)] = true;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& arc : residual[static_cast<std::size_t>(u)]) {
        if (arc.capacity > 0.0 && !seen[static_cast<std::size_t>(arc.to)]) {
          seen[static_cast<std::size_t>(arc.to)] = true;
          stack.push_back(arc.to);
        }
      }
    }
    return seen;
  }

  std::vector<bool> reaching_sink() const {
    std::vector<bool> seen(residual.size(), false);
    std::vector<int> stack{sink};
    seen[static_cast<std::size_t>(sink)] = true;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const auto& arc : residual[static_cast<std::size_t>(v)]) {
        // arc.to -> v has residual capacity held by the paired arc.
        const auto& back =
            residual[static_cast<std::size_t>(arc.to)][static_cast<std::size_t>(arc.reverse)];
        if (back.capacity > 0.0 && !seen[static_cast<std::size_t>(arc.to)]) {
          seen[static_cast<std::size_t>(arc.to)] = true;
          stack.push_back(arc.to);
        }
      }
    }
    return seen;
  }
};

MinCut max_flow_min_cut(const FlowNetwork& network) {
  MaxFlowSolver solver(network);
  MinCut result;
  while (solver.build_levels()) result.flow += solver.blocking_flow();
  result.source_side = solver.reachable_from_source();
  result.sink_side = solver.reaching_sink();
  return result;
}

double cut_capacity(const FlowNetwork& network, const std::vector<bool>& source_side) {
  if (source_side.size() != static_cast<std::size_t>(network.nodes())) {
    throw ArgumentError("cut membership does not match network size");
  }
  double total = 0.0;
  for (int u = 0; u < network.nodes(); ++u) {
    if (!source_side[static_cast<std::size_t>(u)]) continue;
    for (const auto& arc : network.arcs(u)) {
      if (!source_side[static_cast<std::size_t>(arc.to)]) total += arc.capacity;
    }
  }
  return total;
}

}  // namespace pnpgmm
