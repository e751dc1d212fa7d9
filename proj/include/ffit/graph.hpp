#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ffit/errors.hpp"

namespace ffit {

using NodeId = std::uint32_t;

enum class NodeKind { Observable, Parameter, Function, Pdf };

// Computes a function/pdf node value from its children's current values.
using Evaluator = std::function<double(std::span<const double>)>;

struct Node {
  NodeKind kind;
  std::string name;
  std::vector<NodeId> children;
  std::vector<NodeId> clients;  // reverse edges, for dirty propagation
  double value = 0.0;
  bool dirty = true;
  bool constant = false;  // Parameter only
  bool has_value = false;
  double lower = 0.0;  // Parameter/Observable range
  double upper = 0.0;
  double error = 0.0;  // post-fit uncertainty, 0 before fitting
  Evaluator eval;
  std::uint64_t eval_count = 0;  // recomputations, never cache hits
};

// Directed acyclic computation graph with per-node caching and eager
// dirty propagation. Nodes live in a flat table; NodeIds are indices and
// stay stable for the graph's lifetime. Acyclicity holds by construction:
// children must already exist, and the table is append-only.
class Graph {
 public:
  NodeId add_observable(const std::string& name, double lower, double upper);
  NodeId add_parameter(const std::string& name, double value, double lower,
                       double upper, bool constant = false);
  NodeId add_function(const std::string& name, std::vector<NodeId> children,
                      Evaluator eval);
  NodeId add_pdf_node(const std::string& name, std::vector<NodeId> children,
                      Evaluator eval);

  // Parameter update with range check; always dirties all transitive
  // clients, even when the value is unchanged.
  void set_value(NodeId id, double v);

  // Leaf write used when streaming dataset rows through the graph.
  // No range check: the dataset was already filtered at load time.
  void set_observable_value(NodeId id, double v);

  double evaluate_single(NodeId id);

  // True iff no node of the subtree rooted at id is in `observables`.
  bool constant_branch(NodeId id, std::span<const NodeId> observables) const;

  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId id) const { return check(id); }
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  NodeId id_of(const std::string& name) const;
  std::uint64_t total_eval_count() const;

  void set_error(NodeId id, double err);

 private:
  NodeId add(Node n);
  Node& check(NodeId id);
  const Node& check(NodeId id) const;
  void mark_clients_dirty(NodeId id);

  std::vector<Node> nodes_;
  std::unordered_map<std::string, NodeId> index_;
};

}  // namespace ffit
