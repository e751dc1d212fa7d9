#include <cmath>
#include <random>

#include "doctest.h"
#include "ffit/graph.hpp"

using namespace ffit;

namespace {

double sum2(std::span<const double> c) { return c[0] + c[1]; }
double mul2(std::span<const double> c) { return c[0] * c[1]; }

}  // namespace

TEST_CASE("add_node basics") {
  Graph g;
  CHECK(g.add_parameter("mu", 0.0, -5.0, 5.0) == 0);
  CHECK_THROWS_WITH_AS(g.add_parameter("mu", 1.0, -5.0, 5.0),
                       doctest::Contains("duplicate"), Error);
  // A node cannot reference itself: children must pre-exist.
  CHECK_THROWS_AS(g.add_function("f", {5}, sum2), Error);
}

TEST_CASE("set_value dirties exactly the transitive clients") {
  Graph g;
  const NodeId x = g.add_observable("x", -5.0, 5.0);
  const NodeId mu = g.add_parameter("mu", 0.0, -5.0, 5.0);
  const NodeId sigma = g.add_parameter("sigma", 1.0, 0.1, 10.0);
  const NodeId diff = g.add_function("diff", {x, mu}, [](std::span<const double> c) {
    return c[0] - c[1];
  });
  const NodeId gauss = g.add_function("gauss", {diff, sigma}, [](std::span<const double> c) {
    return std::exp(-0.5 * c[0] * c[0] / (c[1] * c[1]));
  });
  g.set_observable_value(x, 1.0);
  g.evaluate_single(gauss);
  CHECK_FALSE(g.node(gauss).dirty);

  g.set_value(mu, 1.0);
  CHECK(g.node(diff).dirty);
  CHECK(g.node(gauss).dirty);
  CHECK_FALSE(g.node(sigma).dirty);
  CHECK_FALSE(g.node(x).dirty);

  // No value-compare shortcut: setting the same value dirties again.
  g.evaluate_single(gauss);
  g.set_value(mu, 1.0);
  CHECK(g.node(gauss).dirty);

  CHECK_THROWS_AS(g.set_value(mu, 99.0), Error);
  CHECK_THROWS_AS(g.set_value(x, 1.0), Error);  // wrong node kind
}

TEST_CASE("constant parameters reject updates") {
  Graph g;
  const NodeId c = g.add_parameter("c", 1.0, 0.0, 2.0, true);
  CHECK_THROWS_AS(g.set_value(c, 1.5), Error);
}

TEST_CASE("evaluate caches and counts recomputations") {
  Graph g;
  const NodeId a = g.add_parameter("a", 3.0, -10.0, 10.0);
  const NodeId b = g.add_parameter("b", 4.0, -10.0, 10.0);
  const NodeId f = g.add_function("f", {a, b}, mul2);

  CHECK(g.evaluate_single(a) == 3.0);  // leaf passthrough
  CHECK(g.evaluate_single(f) == 12.0);
  CHECK(g.node(f).eval_count == 1);
  CHECK(g.evaluate_single(f) == 12.0);
  CHECK(g.node(f).eval_count == 1);  // cache hit, no recomputation

  g.set_value(a, 5.0);
  CHECK(g.evaluate_single(f) == 20.0);
  CHECK(g.node(f).eval_count == 2);
}

TEST_CASE("unset observable leaf is an error") {
  Graph g;
  const NodeId x = g.add_observable("x", 0.0, 1.0);
  const NodeId p = g.add_parameter("p", 1.0, 0.0, 2.0);
  const NodeId f = g.add_function("f", {x, p}, sum2);
  CHECK_THROWS_WITH_AS(g.evaluate_single(f), doctest::Contains("no value"), Error);
  g.set_observable_value(x, 0.5);
  CHECK(g.evaluate_single(f) == 1.5);
}

TEST_CASE("constant_branch") {
  Graph g;
  const NodeId x = g.add_observable("x", -5.0, 5.0);
  const NodeId mu = g.add_parameter("mu", 0.0, -5.0, 5.0);
  const NodeId sigma = g.add_parameter("sigma", 1.0, 0.1, 10.0);
  const NodeId s2 = g.add_function("sigma2", {sigma, sigma}, mul2);
  const NodeId xm = g.add_function("x_minus_mu", {x, mu}, [](std::span<const double> c) {
    return c[0] - c[1];
  });
  const NodeId obs[] = {x};
  CHECK(g.constant_branch(s2, obs));
  CHECK_FALSE(g.constant_branch(xm, obs));
  CHECK_FALSE(g.constant_branch(x, obs));
}

// Cache coherence: random set_value/evaluate sequences agree with a
// cache-free recursive oracle over the same structure.
TEST_CASE("cache coherence against a cache-free oracle") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> uval(-2.0, 2.0);

  for (int trial = 0; trial < 25; ++trial) {
    Graph g;
    // leaves
    std::vector<NodeId> params;
    for (int i = 0; i < 4; ++i) {
      params.push_back(g.add_parameter("p" + std::to_string(i), uval(rng), -10.0, 10.0));
    }
    // random internal nodes over earlier nodes
    struct OracleNode {
      int op;  // 0 add, 1 mul, 2 sub
      NodeId lhs, rhs;
    };
    std::vector<OracleNode> internal;
    std::vector<NodeId> all(params);
    std::uniform_int_distribution<int> op_dist(0, 2);
    for (int i = 0; i < 8; ++i) {
      std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
      const OracleNode on{op_dist(rng), all[pick(rng)], all[pick(rng)]};
      const Evaluator ev = [op = on.op](std::span<const double> c) {
        return op == 0 ? c[0] + c[1] : (op == 1 ? c[0] * c[1] : c[0] - c[1]);
      };
      all.push_back(g.add_function("f" + std::to_string(i), {on.lhs, on.rhs}, ev));
      internal.push_back(on);
    }

    // Cache-free oracle: recompute everything from the leaves each time.
    auto oracle = [&](auto&& self, NodeId id) -> double {
      if (id < params.size()) return g.node(id).value;
      const OracleNode& on = internal[id - params.size()];
      const double l = self(self, on.lhs);
      const double r = self(self, on.rhs);
      return on.op == 0 ? l + r : (on.op == 1 ? l * r : l - r);
    };

    std::uniform_int_distribution<std::size_t> pick_param(0, params.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_node(0, all.size() - 1);
    std::uniform_int_distribution<int> action(0, 2);
    for (int step = 0; step < 60; ++step) {
      if (action(rng) == 0) {
        g.set_value(params[pick_param(rng)], uval(rng));
      } else {
        const NodeId target = all[pick_node(rng)];
        CHECK(g.evaluate_single(target) == oracle(oracle, target));
      }
    }
  }
}
