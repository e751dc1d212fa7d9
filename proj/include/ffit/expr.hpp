#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ffit/errors.hpp"
#include "ffit/fastmath.hpp"

// String formulas compiled to a postfix program. Programs run per entry or
// over whole columns with instruction-outer, entry-inner loops so each
// instruction is a tight vectorizable pass over a batch-sized stack slice.
//
// Grammar (EBNF, see docs/expression-grammar.md):
//   expr    = term { ("+" | "-") term } ;
//   term    = factor { ("*" | "/") factor } ;
//   factor  = ["-"] power ;
//   power   = atom ["^" factor] ;            (* right associative *)
//   atom    = number | ident | ident "(" expr {"," expr} ")" | "(" expr ")" ;
// Functions: exp log sin cos sqrt abs sinh asinh (1 arg), pow (2 args).

namespace ffit::expr {

enum class UnaryOp { Neg };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

enum class Func { Exp, Log, Sin, Cos, Sqrt, Abs, Sinh, Asinh, Pow };

struct AstNode;
using AstPtr = std::unique_ptr<AstNode>;

struct AstNode {
  struct Number {
    double value;
  };
  struct Var {
    std::string name;
    std::size_t slot;  // index into the declared variable list
  };
  struct Unary {
    UnaryOp op;
    AstPtr child;
  };
  struct Binary {
    BinaryOp op;
    AstPtr lhs;
    AstPtr rhs;
  };
  struct Call {
    Func func;
    std::vector<AstPtr> args;
  };
  std::variant<Number, Var, Unary, Binary, Call> node;
};

AstPtr parse(const std::string& text, std::span<const std::string> variables);

bool ast_equal(const AstNode& a, const AstNode& b);
std::string pretty_print(const AstNode& ast);

// Direct tree-walk evaluation; the independent oracle for compiled programs.
double eval_ast(const AstNode& ast, std::span<const double> values);

enum class OpCode : std::uint8_t {
  PushConst,
  LoadVar,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Pow,
  Square,  // integer-exponent specializations of '^'
  Cube,
  Fourth,
  CallExp,
  CallLog,
  CallSin,
  CallCos,
  CallSqrt,
  CallAbs,
  CallSinh,
  CallAsinh,
};

struct Instr {
  OpCode op;
  double constant = 0.0;   // PushConst
  std::uint32_t slot = 0;  // LoadVar
};

// A variable bound for batch execution: either a full column (observable)
// or a scalar broadcast across the batch (parameter).
struct Binding {
  std::span<const double> column;
  double scalar = 0.0;
  bool is_scalar = true;

  static Binding broadcast(double v) { return Binding{{}, v, true}; }
  static Binding from_column(std::span<const double> c) { return Binding{c, 0.0, false}; }
};

class Program {
 public:
  Program() = default;

  const std::vector<Instr>& instructions() const { return instrs_; }
  std::size_t max_stack_depth() const { return max_depth_; }
  const std::vector<std::string>& variables() const { return vars_; }

  double eval(std::span<const double> values,
              fastmath::MathPolicy policy = fastmath::MathPolicy::Precise) const;
  double eval(const std::map<std::string, double>& values,
              fastmath::MathPolicy policy = fastmath::MathPolicy::Precise) const;

  void eval_batch(std::span<const Binding> bindings, std::span<double> out,
                  fastmath::MathPolicy policy = fastmath::MathPolicy::Precise) const;

  friend Program compile(const AstNode& ast, std::span<const std::string> variables);

 private:
  std::vector<Instr> instrs_;
  std::vector<std::string> vars_;
  std::size_t max_depth_ = 0;
};

// Postfix compilation with constant folding of fully-constant subtrees.
Program compile(const AstNode& ast, std::span<const std::string> variables);

// parse + compile in one step.
Program compile(const std::string& text, std::span<const std::string> variables);

}  // namespace ffit::expr
