#include "ffit/graph.hpp"

namespace ffit {

NodeId Graph::add(Node n) {
  if (index_.count(n.name)) {
    throw Error(ErrorCode::Usage, "duplicate node name: " + n.name);
  }
  for (const NodeId c : n.children) {
    if (c >= nodes_.size()) {
      throw Error(ErrorCode::Usage, "child node " + std::to_string(c) +
                                        " does not exist in this graph");
    }
  }
  const NodeId id = static_cast<NodeId>(nodes_.size());
  for (const NodeId c : n.children) nodes_[c].clients.push_back(id);
  index_.emplace(n.name, id);
  nodes_.push_back(std::move(n));
  return id;
}

NodeId Graph::add_observable(const std::string& name, double lower, double upper) {
  if (!(lower < upper)) {
    throw Error(ErrorCode::Usage, "observable '" + name + "': lower must be < upper");
  }
  Node n;
  n.kind = NodeKind::Observable;
  n.name = name;
  n.lower = lower;
  n.upper = upper;
  n.dirty = true;
  n.has_value = false;
  return add(std::move(n));
}

NodeId Graph::add_parameter(const std::string& name, double value, double lower,
                            double upper, bool constant) {
  if (!(lower <= value && value <= upper)) {
    throw Error(ErrorCode::Usage, "parameter '" + name + "': value outside range");
  }
  if (!(lower < upper) && !constant) {
    throw Error(ErrorCode::Usage, "parameter '" + name + "': empty range");
  }
  Node n;
  n.kind = NodeKind::Parameter;
  n.name = name;
  n.value = value;
  n.lower = lower;
  n.upper = upper;
  n.constant = constant;
  n.dirty = false;
  n.has_value = true;
  return add(std::move(n));
}

NodeId Graph::add_function(const std::string& name, std::vector<NodeId> children,
                           Evaluator eval) {
  Node n;
  n.kind = NodeKind::Function;
  n.name = name;
  n.children = std::move(children);
  n.eval = std::move(eval);
  n.dirty = true;
  return add(std::move(n));
}

NodeId Graph::add_pdf_node(const std::string& name, std::vector<NodeId> children,
                           Evaluator eval) {
  Node n;
  n.kind = NodeKind::Pdf;
  n.name = name;
  n.children = std::move(children);
  n.eval = std::move(eval);
  n.dirty = true;
  return add(std::move(n));
}

Node& Graph::check(NodeId id) {
  if (id >= nodes_.size()) {
    throw Error(ErrorCode::Usage, "invalid node id " + std::to_string(id));
  }
  return nodes_[id];
}

const Node& Graph::check(NodeId id) const {
  if (id >= nodes_.size()) {
    throw Error(ErrorCode::Usage, "invalid node id " + std::to_string(id));
  }
  return nodes_[id];
}

NodeId Graph::id_of(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) {
    throw Error(ErrorCode::Usage, "unknown node name: " + name);
  }
  return it->second;
}

void Graph::mark_clients_dirty(NodeId id) {
  // Eager DFS over reverse edges.
  std::vector<NodeId> stack(nodes_[id].clients.begin(), nodes_[id].clients.end());
  while (!stack.empty()) {
    const NodeId c = stack.back();
    stack.pop_back();
    Node& n = nodes_[c];
    if (n.dirty) continue;  // clients already dirty too
    n.dirty = true;
    stack.insert(stack.end(), n.clients.begin(), n.clients.end());
  }
}

void Graph::set_value(NodeId id, double v) {
  Node& n = check(id);
  if (n.kind != NodeKind::Parameter) {
    throw Error(ErrorCode::Usage, "set_value: node '" + n.name + "' is not a parameter");
  }
  if (n.constant) {
    throw Error(ErrorCode::Usage, "set_value: parameter '" + n.name + "' is constant");
  }
  if (!(n.lower <= v && v <= n.upper)) {
    throw Error(ErrorCode::Numeric, "set_value: " + std::to_string(v) +
                                        " outside range of '" + n.name + "'");
  }
  n.value = v;
  mark_clients_dirty(id);
}

void Graph::set_observable_value(NodeId id, double v) {
  Node& n = check(id);
  if (n.kind != NodeKind::Observable) {
    throw Error(ErrorCode::Usage, "set_observable_value: '" + n.name + "' is not an observable");
  }
  n.value = v;
  n.has_value = true;
  n.dirty = false;
  mark_clients_dirty(id);
}

double Graph::evaluate_single(NodeId id) {
  Node& n = check(id);
  if (n.kind == NodeKind::Observable || n.kind == NodeKind::Parameter) {
    if (!n.has_value) {
      throw Error(ErrorCode::Numeric, "leaf '" + n.name + "' has no value set");
    }
    return n.value;
  }
  if (!n.dirty) return n.value;
  std::vector<double> child_values(n.children.size());
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    child_values[i] = evaluate_single(n.children[i]);
  }
  n.value = n.eval(child_values);
  n.dirty = false;
  ++n.eval_count;
  return n.value;
}

bool Graph::constant_branch(NodeId id, std::span<const NodeId> observables) const {
  check(id);
  std::vector<NodeId> stack{id};
  std::unordered_set<NodeId> seen;
  while (!stack.empty()) {
    const NodeId cur = stack.back();
    stack.pop_back();
    if (!seen.insert(cur).second) continue;
    for (const NodeId obs : observables) {
      if (cur == obs) return false;
    }
    const Node& n = nodes_[cur];
    stack.insert(stack.end(), n.children.begin(), n.children.end());
  }
  return true;
}

std::uint64_t Graph::total_eval_count() const {
  std::uint64_t total = 0;
  for (const Node& n : nodes_) total += n.eval_count;
  return total;
}

void Graph::set_error(NodeId id, double err) {
  Node& n = check(id);
  if (n.kind != NodeKind::Parameter) {
    throw Error(ErrorCode::Usage, "set_error: '" + n.name + "' is not a parameter");
  }
  n.error = err;
}

}  // namespace ffit
