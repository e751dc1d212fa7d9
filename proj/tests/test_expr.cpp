#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "ffit/expr.hpp"

using namespace ffit;
using namespace ffit::expr;

namespace {

double run(const std::string& text, std::span<const std::string> vars,
           std::span<const double> values) {
  return compile(text, vars).eval(values);
}

}  // namespace

TEST_CASE("parse and evaluate basic expressions") {
  const std::vector<std::string> xs{"x"};
  const std::vector<std::string> ax{"a", "x"};
  // quadratic with a trailing-dot literal; a=3, x=2
  CHECK(run("a*x*x + 1.", ax, std::vector<double>{3.0, 2.0}) == 13.0);
  CHECK(run("x + 2*x", xs, std::vector<double>{2.0}) == 6.0);
  CHECK(run("-x^2", xs, std::vector<double>{3.0}) == -9.0);  // unary binds loosest
  CHECK(run("2^3^2", xs, std::vector<double>{0.0}) == 512.0);  // right assoc
  CHECK(run("(1+2)*4", xs, std::vector<double>{0.0}) == 12.0);
  CHECK(run("pow(2, 10)", xs, std::vector<double>{0.0}) == 1024.0);
  CHECK(run("abs(-3.5)", xs, std::vector<double>{0.0}) == 3.5);
  CHECK(run("exp(0)", xs, std::vector<double>{0.0}) == 1.0);
  CHECK(run("sqrt(x)", xs, std::vector<double>{16.0}) == 4.0);
  CHECK(run("asinh(sinh(x))", xs, std::vector<double>{1.25}) ==
        doctest::Approx(1.25).epsilon(1e-14));
}

TEST_CASE("variable slots follow declaration order, not appearance order") {
  const std::vector<std::string> vars{"a", "x"};
  Program p = compile("x - a", vars);
  CHECK(p.eval(std::vector<double>{1.0, 10.0}) == 9.0);
  CHECK(p.eval(std::map<std::string, double>{{"a", 1.0}, {"x", 10.0}}) == 9.0);
}

TEST_CASE("parse errors carry the byte offset") {
  const std::vector<std::string> xs{"x"};
  CHECK_THROWS_WITH_AS(parse("x +* 2", xs), doctest::Contains("offset 3"), Error);
  CHECK_THROWS_WITH_AS(parse("(x + 2", xs), doctest::Contains("offset"), Error);
  CHECK_THROWS_WITH_AS(parse("", xs), doctest::Contains("offset"), Error);
  CHECK_THROWS_WITH_AS(parse("x + q", xs), doctest::Contains("unknown identifier"),
                       Error);
  CHECK_THROWS_WITH_AS(parse("frob(x)", xs), doctest::Contains("unknown function"),
                       Error);
  CHECK_THROWS_WITH_AS(parse("pow(x)", xs), doctest::Contains("expects"), Error);
  CHECK_THROWS_WITH_AS(parse("exp(x, 2)", xs), doctest::Contains("expects"), Error);
}

TEST_CASE("pretty_print round trips through the parser") {
  const std::vector<std::string> vars{"x", "mu", "sigma"};
  const char* samples[] = {
      "exp(-(x-mu)^2 / (2*sigma^2))",
      "x*x + -mu / (sigma + 2)",
      "pow(x, mu) - sin(cos(x))",
      "2^x^mu",
  };
  for (const char* s : samples) {
    const AstPtr a = parse(s, vars);
    const AstPtr b = parse(pretty_print(*a), vars);
    CHECK(ast_equal(*a, *b));
  }
}

TEST_CASE("constant folding collapses constant subtrees") {
  const std::vector<std::string> xs{"x"};
  Program p = compile("2*3 + x", xs);
  REQUIRE(p.instructions().size() == 3);
  CHECK(p.instructions()[0].op == OpCode::PushConst);
  CHECK(p.instructions()[0].constant == 6.0);
  CHECK(p.instructions()[1].op == OpCode::LoadVar);
  CHECK(p.instructions()[2].op == OpCode::Add);

  // a fully-constant expression folds to a single push
  Program q = compile("exp(1) * (2 + 3)", xs);
  REQUIRE(q.instructions().size() == 1);
  CHECK(q.instructions()[0].constant == std::exp(1.0) * 5.0);
}

TEST_CASE("small integer powers are specialized") {
  const std::vector<std::string> xs{"x"};
  auto last_op = [&](const std::string& s) {
    return compile(s, xs).instructions().back().op;
  };
  CHECK(last_op("x^2") == OpCode::Square);
  CHECK(last_op("x^3") == OpCode::Cube);
  CHECK(last_op("x^4") == OpCode::Fourth);
  CHECK(last_op("x^5") == OpCode::Pow);
}

// Property: compiled programs agree bit-for-bit with the tree-walk oracle
// on randomly generated ASTs.
TEST_CASE("compiled programs match the tree-walk oracle bit-for-bit") {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> uconst(-3.0, 3.0);
  std::uniform_int_distribution<int> pick_kind(0, 9);
  const std::vector<std::string> vars{"x", "y", "z"};

  // generate a random expression string of bounded depth
  auto gen = [&](auto&& self, int depth) -> std::string {
    if (depth <= 0 || pick_kind(rng) < 2) {
      if (pick_kind(rng) < 5) return vars[pick_kind(rng) % 3];
      return std::to_string(uconst(rng));
    }
    switch (pick_kind(rng)) {
      case 0: return "(" + self(self, depth - 1) + " + " + self(self, depth - 1) + ")";
      case 1: return "(" + self(self, depth - 1) + " - " + self(self, depth - 1) + ")";
      case 2: return "(" + self(self, depth - 1) + " * " + self(self, depth - 1) + ")";
      case 3: return "(" + self(self, depth - 1) + " / " + self(self, depth - 1) + ")";
      case 4: return "(-" + self(self, depth - 1) + ")";
      case 5: return "sin(" + self(self, depth - 1) + ")";
      case 6: return "cos(" + self(self, depth - 1) + ")";
      case 7: return "exp(" + self(self, depth - 1) + " * 0.125)";
      case 8: return "(" + self(self, depth - 1) + ")^2";
      default: return "abs(" + self(self, depth - 1) + ")";
    }
  };

  std::uniform_real_distribution<double> uval(-2.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::string text = gen(gen, 4);
    const AstPtr ast = parse(text, vars);
    const Program prog = compile(*ast, vars);
    const std::vector<double> values{uval(rng), uval(rng), uval(rng)};
    const double want = eval_ast(*ast, values);
    const double got = prog.eval(values);
    if (std::isnan(want)) {
      CHECK(std::isnan(got));
    } else {
      CHECK(got == want);  // bitwise, both routes share the same pow mapping
    }
  }
}

TEST_CASE("batch evaluation broadcasts scalars over columns") {
  const std::vector<std::string> vars{"x", "c"};
  Program p = compile("x*x + c", vars);
  const std::vector<double> xs{0.0, - 1.5, 3.0};
  std::vector<double> out(xs.size());
  const Binding bindings[] = {Binding::from_column(xs), Binding::broadcast(4.0)};
  p.eval_batch(bindings, out);
  CHECK(out == std::vector<double>{4.0, 6.25, 13.0});

  // batch agrees with scalar eval entry by entry, both policies
  for (const auto policy : {fastmath::MathPolicy::Precise, fastmath::MathPolicy::Fast}) {
    Program q = compile("exp(-x) + log(c + x*x)", vars);
    std::vector<double> batch_out(xs.size());
    const Binding b2[] = {Binding::from_column(xs), Binding::broadcast(4.0)};
    q.eval_batch(b2, batch_out, policy);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      CHECK(batch_out[i] == q.eval(std::vector<double>{xs[i], 4.0}, policy));
    }
  }
}

TEST_CASE("batch errors") {
  const std::vector<std::string> vars{"x", "y"};
  Program p = compile("x + y", vars);
  std::vector<double> out(3);
  const std::vector<double> shorter{1.0, 2.0};
  const std::vector<double> col{1.0, 2.0, 3.0};
  const Binding mismatched[] = {Binding::from_column(col), Binding::from_column(shorter)};
  CHECK_THROWS_AS(p.eval_batch(mismatched, out), Error);
  const Binding too_few[] = {Binding::from_column(col)};
  CHECK_THROWS_AS(p.eval_batch(too_few, out), Error);
}
