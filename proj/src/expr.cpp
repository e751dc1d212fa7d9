#include "ffit/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>

namespace ffit::expr {

namespace {

struct FuncInfo {
  const char* name;
  Func func;
  std::size_t arity;
};

constexpr FuncInfo kFuncs[] = {
    {"exp", Func::Exp, 1},   {"log", Func::Log, 1},     {"sin", Func::Sin, 1},
    {"cos", Func::Cos, 1},   {"sqrt", Func::Sqrt, 1},   {"abs", Func::Abs, 1},
    {"sinh", Func::Sinh, 1}, {"asinh", Func::Asinh, 1}, {"pow", Func::Pow, 2},
};

const FuncInfo* find_func(const std::string& name) {
  for (const auto& f : kFuncs) {
    if (name == f.name) return &f;
  }
  return nullptr;
}

[[noreturn]] void syntax_error(std::size_t offset, const std::string& what) {
  throw Error(ErrorCode::Usage,
              "syntax error at offset " + std::to_string(offset) + ": " + what);
}

class Parser {
 public:
  Parser(const std::string& text, std::span<const std::string> variables)
      : text_(text), vars_(variables) {}

  AstPtr run() {
    AstPtr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) syntax_error(pos_, "unexpected trailing input");
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  AstPtr parse_expr() {
    AstPtr lhs = parse_term();
    while (true) {
      if (consume('+')) {
        lhs = make_binary(BinaryOp::Add, std::move(lhs), parse_term());
      } else if (consume('-')) {
        lhs = make_binary(BinaryOp::Sub, std::move(lhs), parse_term());
      } else {
        return lhs;
      }
    }
  }

  AstPtr parse_term() {
    AstPtr lhs = parse_factor();
    while (true) {
      if (consume('*')) {
        lhs = make_binary(BinaryOp::Mul, std::move(lhs), parse_factor());
      } else if (consume('/')) {
        lhs = make_binary(BinaryOp::Div, std::move(lhs), parse_factor());
      } else {
        return lhs;
      }
    }
  }

  AstPtr parse_factor() {
    if (consume('-')) {
      auto n = std::make_unique<AstNode>();
      n->node = AstNode::Unary{UnaryOp::Neg, parse_factor()};
      return n;
    }
    return parse_power();
  }

  AstPtr parse_power() {
    AstPtr base = parse_atom();
    if (consume('^')) {
      // Right associative; binds tighter than unary minus on the left.
      return make_binary(BinaryOp::Pow, std::move(base), parse_factor());
    }
    return base;
  }

  AstPtr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) syntax_error(pos_, "unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      AstPtr e = parse_expr();
      if (!consume(')')) syntax_error(pos_, "expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    syntax_error(pos_, std::string("unexpected character '") + c + "'");
  }

  AstPtr parse_number() {
    const std::size_t start = pos_;
    double v = 0.0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc()) syntax_error(start, "invalid number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    auto n = std::make_unique<AstNode>();
    n->node = AstNode::Number{v};
    return n;
  }

  AstPtr parse_ident() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name = text_.substr(start, pos_ - start);
    if (peek() == '(') {
      const FuncInfo* f = find_func(name);
      if (!f) {
        throw Error(ErrorCode::Usage, "unknown function: " + name);
      }
      consume('(');
      std::vector<AstPtr> args;
      if (peek() != ')') {
        args.push_back(parse_expr());
        while (consume(',')) args.push_back(parse_expr());
      }
      if (!consume(')')) syntax_error(pos_, "expected ')'");
      if (args.size() != f->arity) {
        throw Error(ErrorCode::Usage, "function '" + name + "' expects " +
                                          std::to_string(f->arity) + " argument(s), got " +
                                          std::to_string(args.size()));
      }
      auto n = std::make_unique<AstNode>();
      n->node = AstNode::Call{f->func, std::move(args)};
      return n;
    }
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (vars_[i] == name) {
        auto n = std::make_unique<AstNode>();
        n->node = AstNode::Var{name, i};
        return n;
      }
    }
    throw Error(ErrorCode::Usage, "unknown identifier: " + name);
  }

  static AstPtr make_binary(BinaryOp op, AstPtr lhs, AstPtr rhs) {
    auto n = std::make_unique<AstNode>();
    n->node = AstNode::Binary{op, std::move(lhs), std::move(rhs)};
    return n;
  }

  const std::string& text_;
  std::span<const std::string> vars_;
  std::size_t pos_ = 0;
};

const char* func_name(Func f) {
  for (const auto& fi : kFuncs) {
    if (fi.func == f) return fi.name;
  }
  return "?";
}

// '^' and pow() desugar to multiplication chains for exponents 2, 3, 4;
// this is the language's definition, shared by the tree-walk evaluator,
// constant folding and the compiled opcodes.
double apply_pow(double base, double exponent) {
  if (exponent == 2.0) return base * base;
  if (exponent == 3.0) return base * base * base;
  if (exponent == 4.0) {
    const double b2 = base * base;
    return b2 * b2;
  }
  return std::pow(base, exponent);
}

double apply_func(Func f, double a, double b) {
  switch (f) {
    case Func::Exp: return std::exp(a);
    case Func::Log: return std::log(a);
    case Func::Sin: return std::sin(a);
    case Func::Cos: return std::cos(a);
    case Func::Sqrt: return std::sqrt(a);
    case Func::Abs: return std::fabs(a);
    case Func::Sinh: return std::sinh(a);
    case Func::Asinh: return std::asinh(a);
    case Func::Pow: return apply_pow(a, b);
  }
  return 0.0;
}

}  // namespace

AstPtr parse(const std::string& text, std::span<const std::string> variables) {
  return Parser(text, variables).run();
}

bool ast_equal(const AstNode& a, const AstNode& b) {
  if (a.node.index() != b.node.index()) return false;
  if (const auto* n = std::get_if<AstNode::Number>(&a.node)) {
    return n->value == std::get<AstNode::Number>(b.node).value;
  }
  if (const auto* v = std::get_if<AstNode::Var>(&a.node)) {
    return v->slot == std::get<AstNode::Var>(b.node).slot;
  }
  if (const auto* u = std::get_if<AstNode::Unary>(&a.node)) {
    const auto& ub = std::get<AstNode::Unary>(b.node);
    return u->op == ub.op && ast_equal(*u->child, *ub.child);
  }
  if (const auto* bi = std::get_if<AstNode::Binary>(&a.node)) {
    const auto& bb = std::get<AstNode::Binary>(b.node);
    return bi->op == bb.op && ast_equal(*bi->lhs, *bb.lhs) && ast_equal(*bi->rhs, *bb.rhs);
  }
  const auto& ca = std::get<AstNode::Call>(a.node);
  const auto& cb = std::get<AstNode::Call>(b.node);
  if (ca.func != cb.func || ca.args.size() != cb.args.size()) return false;
  for (std::size_t i = 0; i < ca.args.size(); ++i) {
    if (!ast_equal(*ca.args[i], *cb.args[i])) return false;
  }
  return true;
}

std::string pretty_print(const AstNode& ast) {
  std::ostringstream os;
  os.precision(17);
  if (const auto* n = std::get_if<AstNode::Number>(&ast.node)) {
    os << n->value;
  } else if (const auto* v = std::get_if<AstNode::Var>(&ast.node)) {
    os << v->name;
  } else if (const auto* u = std::get_if<AstNode::Unary>(&ast.node)) {
    os << "(-" << pretty_print(*u->child) << ")";
  } else if (const auto* b = std::get_if<AstNode::Binary>(&ast.node)) {
    const char* op = nullptr;
    switch (b->op) {
      case BinaryOp::Add: op = "+"; break;
      case BinaryOp::Sub: op = "-"; break;
      case BinaryOp::Mul: op = "*"; break;
      case BinaryOp::Div: op = "/"; break;
      case BinaryOp::Pow: op = "^"; break;
    }
    os << "(" << pretty_print(*b->lhs) << op << pretty_print(*b->rhs) << ")";
  } else {
    const auto& c = std::get<AstNode::Call>(ast.node);
    os << func_name(c.func) << "(";
    for (std::size_t i = 0; i < c.args.size(); ++i) {
      if (i) os << ",";
      os << pretty_print(*c.args[i]);
    }
    os << ")";
  }
  return os.str();
}

double eval_ast(const AstNode& ast, std::span<const double> values) {
  if (const auto* n = std::get_if<AstNode::Number>(&ast.node)) return n->value;
  if (const auto* v = std::get_if<AstNode::Var>(&ast.node)) return values[v->slot];
  if (const auto* u = std::get_if<AstNode::Unary>(&ast.node)) {
    return -eval_ast(*u->child, values);
  }
  if (const auto* b = std::get_if<AstNode::Binary>(&ast.node)) {
    const double l = eval_ast(*b->lhs, values);
    const double r = eval_ast(*b->rhs, values);
    switch (b->op) {
      case BinaryOp::Add: return l + r;
      case BinaryOp::Sub: return l - r;
      case BinaryOp::Mul: return l * r;
      case BinaryOp::Div: return l / r;
      case BinaryOp::Pow: return apply_pow(l, r);
    }
  }
  const auto& c = std::get<AstNode::Call>(ast.node);
  const double a0 = eval_ast(*c.args[0], values);
  const double a1 = c.args.size() > 1 ? eval_ast(*c.args[1], values) : 0.0;
  return apply_func(c.func, a0, a1);
}

namespace {

class Compiler {
 public:
  explicit Compiler(std::vector<Instr>& out) : out_(out) {}

  std::size_t max_depth() const { return max_depth_; }

  void emit_value(const AstNode& ast) {
    if (const auto folded = fold(ast)) {
      push(Instr{OpCode::PushConst, *folded, 0});
      return;
    }
    if (const auto* v = std::get_if<AstNode::Var>(&ast.node)) {
      push(Instr{OpCode::LoadVar, 0.0, static_cast<std::uint32_t>(v->slot)});
      return;
    }
    if (const auto* u = std::get_if<AstNode::Unary>(&ast.node)) {
      emit_value(*u->child);
      op(OpCode::Neg, 0);
      return;
    }
    if (const auto* b = std::get_if<AstNode::Binary>(&ast.node)) {
      if (b->op == BinaryOp::Pow) {
        emit_pow(*b->lhs, *b->rhs);
        return;
      }
      emit_value(*b->lhs);
      emit_value(*b->rhs);
      switch (b->op) {
        case BinaryOp::Add: op(OpCode::Add, 1); break;
        case BinaryOp::Sub: op(OpCode::Sub, 1); break;
        case BinaryOp::Mul: op(OpCode::Mul, 1); break;
        case BinaryOp::Div: op(OpCode::Div, 1); break;
        case BinaryOp::Pow: break;
      }
      return;
    }
    const auto& c = std::get<AstNode::Call>(ast.node);
    if (c.func == Func::Pow) {
      emit_pow(*c.args[0], *c.args[1]);
      return;
    }
    emit_value(*c.args[0]);
    switch (c.func) {
      case Func::Exp: op(OpCode::CallExp, 0); break;
      case Func::Log: op(OpCode::CallLog, 0); break;
      case Func::Sin: op(OpCode::CallSin, 0); break;
      case Func::Cos: op(OpCode::CallCos, 0); break;
      case Func::Sqrt: op(OpCode::CallSqrt, 0); break;
      case Func::Abs: op(OpCode::CallAbs, 0); break;
      case Func::Sinh: op(OpCode::CallSinh, 0); break;
      case Func::Asinh: op(OpCode::CallAsinh, 0); break;
      case Func::Pow: break;
    }
  }

 private:
  // Small integer exponents become multiplication chains.
  void emit_pow(const AstNode& base, const AstNode& exponent) {
    if (const auto ec = fold(exponent)) {
      if (*ec == 2.0 || *ec == 3.0 || *ec == 4.0) {
        emit_value(base);
        op(*ec == 2.0 ? OpCode::Square : (*ec == 3.0 ? OpCode::Cube : OpCode::Fourth), 0);
        return;
      }
    }
    emit_value(base);
    emit_value(exponent);
    op(OpCode::Pow, 1);
  }

  static std::optional<double> fold(const AstNode& ast) {
    if (const auto* n = std::get_if<AstNode::Number>(&ast.node)) return n->value;
    if (std::get_if<AstNode::Var>(&ast.node)) return std::nullopt;
    if (const auto* u = std::get_if<AstNode::Unary>(&ast.node)) {
      const auto c = fold(*u->child);
      if (!c) return std::nullopt;
      return -*c;
    }
    if (const auto* b = std::get_if<AstNode::Binary>(&ast.node)) {
      const auto l = fold(*b->lhs);
      const auto r = fold(*b->rhs);
      if (!l || !r) return std::nullopt;
      switch (b->op) {
        case BinaryOp::Add: return *l + *r;
        case BinaryOp::Sub: return *l - *r;
        case BinaryOp::Mul: return *l * *r;
        case BinaryOp::Div: return *l / *r;
        case BinaryOp::Pow: return apply_pow(*l, *r);
      }
    }
    const auto& c = std::get<AstNode::Call>(ast.node);
    std::vector<double> args;
    for (const auto& a : c.args) {
      const auto v = fold(*a);
      if (!v) return std::nullopt;
      args.push_back(*v);
    }
    return apply_func(c.func, args[0], args.size() > 1 ? args[1] : 0.0);
  }

  void push(Instr i) {
    out_.push_back(i);
    ++depth_;
    if (depth_ > max_depth_) max_depth_ = depth_;
  }

  void op(OpCode o, std::size_t pops) {
    out_.push_back(Instr{o, 0.0, 0});
    depth_ -= pops;
  }

  std::vector<Instr>& out_;
  std::size_t depth_ = 0;
  std::size_t max_depth_ = 0;
};

}  // namespace

Program compile(const AstNode& ast, std::span<const std::string> variables) {
  Program p;
  Compiler c(p.instrs_);
  c.emit_value(ast);
  p.max_depth_ = c.max_depth();
  p.vars_.assign(variables.begin(), variables.end());
  return p;
}

Program compile(const std::string& text, std::span<const std::string> variables) {
  const AstPtr ast = parse(text, variables);
  return compile(*ast, variables);
}

double Program::eval(std::span<const double> values, fastmath::MathPolicy policy) const {
  if (values.size() < vars_.size()) {
    throw Error(ErrorCode::Usage, "unbound variable: expected " +
                                      std::to_string(vars_.size()) + " values, got " +
                                      std::to_string(values.size()));
  }
  const bool fast = policy == fastmath::MathPolicy::Fast;
  double sbuf[64];
  std::vector<double> hbuf;
  double* stack = sbuf;
  if (max_depth_ > 64) {
    hbuf.resize(max_depth_);
    stack = hbuf.data();
  }
  std::size_t top = 0;
  for (const Instr& in : instrs_) {
    switch (in.op) {
      case OpCode::PushConst: stack[top++] = in.constant; break;
      case OpCode::LoadVar: stack[top++] = values[in.slot]; break;
      case OpCode::Add: --top; stack[top - 1] += stack[top]; break;
      case OpCode::Sub: --top; stack[top - 1] -= stack[top]; break;
      case OpCode::Mul: --top; stack[top - 1] *= stack[top]; break;
      case OpCode::Div: --top; stack[top - 1] /= stack[top]; break;
      case OpCode::Neg: stack[top - 1] = -stack[top - 1]; break;
      case OpCode::Pow: --top; stack[top - 1] = apply_pow(stack[top - 1], stack[top]); break;
      case OpCode::Square: stack[top - 1] *= stack[top - 1]; break;
      case OpCode::Cube: {
        const double v = stack[top - 1];
        stack[top - 1] = v * v * v;
        break;
      }
      case OpCode::Fourth: {
        const double v = stack[top - 1];
        const double v2 = v * v;
        stack[top - 1] = v2 * v2;
        break;
      }
      case OpCode::CallExp:
        stack[top - 1] = fast ? fastmath::fast_exp(stack[top - 1]) : std::exp(stack[top - 1]);
        break;
      case OpCode::CallLog:
        stack[top - 1] = fast ? fastmath::fast_log(stack[top - 1]) : std::log(stack[top - 1]);
        break;
      case OpCode::CallSin: stack[top - 1] = std::sin(stack[top - 1]); break;
      case OpCode::CallCos: stack[top - 1] = std::cos(stack[top - 1]); break;
      case OpCode::CallSqrt: stack[top - 1] = std::sqrt(stack[top - 1]); break;
      case OpCode::CallAbs: stack[top - 1] = std::fabs(stack[top - 1]); break;
      case OpCode::CallSinh: stack[top - 1] = std::sinh(stack[top - 1]); break;
      case OpCode::CallAsinh: stack[top - 1] = std::asinh(stack[top - 1]); break;
    }
  }
  return stack[0];
}

double Program::eval(const std::map<std::string, double>& values,
                     fastmath::MathPolicy policy) const {
  std::vector<double> v(vars_.size());
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    const auto it = values.find(vars_[i]);
    if (it == values.end()) {
      throw Error(ErrorCode::Usage, "unbound variable: " + vars_[i]);
    }
    v[i] = it->second;
  }
  return eval(v, policy);
}

void Program::eval_batch(std::span<const Binding> bindings, std::span<double> out,
                         fastmath::MathPolicy policy) const {
  if (bindings.size() < vars_.size()) {
    throw Error(ErrorCode::Usage, "unbound variable in batch evaluation");
  }
  const std::size_t n = out.size();
  for (const Binding& b : bindings) {
    if (!b.is_scalar && b.column.size() != n) {
      throw Error(ErrorCode::Usage, "batch column length mismatch");
    }
  }
  if (n == 0) return;

  const bool fast = policy == fastmath::MathPolicy::Fast;
  // Instruction-outer execution over a batch-sized value stack: every
  // instruction is one tight loop over contiguous memory.
  std::vector<double> scratch(max_depth_ * n);
  std::size_t top = 0;
  auto slot = [&](std::size_t level) { return scratch.data() + level * n; };

  for (const Instr& in : instrs_) {
    switch (in.op) {
      case OpCode::PushConst: {
        double* __restrict s = slot(top++);
        const double c = in.constant;
        for (std::size_t i = 0; i < n; ++i) s[i] = c;
        break;
      }
      case OpCode::LoadVar: {
        double* __restrict s = slot(top++);
        const Binding& b = bindings[in.slot];
        if (b.is_scalar) {
          const double c = b.scalar;
          for (std::size_t i = 0; i < n; ++i) s[i] = c;
        } else {
          const double* __restrict src = b.column.data();
          for (std::size_t i = 0; i < n; ++i) s[i] = src[i];
        }
        break;
      }
      case OpCode::Add: {
        --top;
        double* __restrict a = slot(top - 1);
        const double* __restrict b = slot(top);
        for (std::size_t i = 0; i < n; ++i) a[i] += b[i];
        break;
      }
      case OpCode::Sub: {
        --top;
        double* __restrict a = slot(top - 1);
        const double* __restrict b = slot(top);
        for (std::size_t i = 0; i < n; ++i) a[i] -= b[i];
        break;
      }
      case OpCode::Mul: {
        --top;
        double* __restrict a = slot(top - 1);
        const double* __restrict b = slot(top);
        for (std::size_t i = 0; i < n; ++i) a[i] *= b[i];
        break;
      }
      case OpCode::Div: {
        --top;
        double* __restrict a = slot(top - 1);
        const double* __restrict b = slot(top);
        for (std::size_t i = 0; i < n; ++i) a[i] /= b[i];
        break;
      }
      case OpCode::Neg: {
        double* __restrict a = slot(top - 1);
        for (std::size_t i = 0; i < n; ++i) a[i] = -a[i];
        break;
      }
      case OpCode::Pow: {
        --top;
        double* __restrict a = slot(top - 1);
        const double* __restrict b = slot(top);
        for (std::size_t i = 0; i < n; ++i) a[i] = apply_pow(a[i], b[i]);
        break;
      }
      case OpCode::Square: {
        double* __restrict a = slot(top - 1);
        for (std::size_t i = 0; i < n; ++i) a[i] *= a[i];
        break;
      }
      case OpCode::Cube: {
        double* __restrict a = slot(top - 1);
        for (std::size_t i = 0; i < n; ++i) a[i] = a[i] * a[i] * a[i];
        break;
      }
      case OpCode::Fourth: {
        double* __restrict a = slot(top - 1);
        for (std::size_t i = 0; i < n; ++i) {
          const double v2 = a[i] * a[i];
          a[i] = v2 * v2;
        }
        break;
      }
      case OpCode::CallExp: {
        double* __restrict a = slot(top - 1);
        if (fast) {
          for (std::size_t i = 0; i < n; ++i) a[i] = fastmath::fast_exp(a[i]);
        } else {
          for (std::size_t i = 0; i < n; ++i) a[i] = std::exp(a[i]);
        }
        break;
      }
      case OpCode::CallLog: {
        double* __restrict a = slot(top - 1);
        if (fast) {
          for (std::size_t i = 0; i < n; ++i) a[i] = fastmath::fast_log(a[i]);
        } else {
          for (std::size_t i = 0; i < n; ++i) a[i] = std::log(a[i]);
        }
        break;
      }
      case OpCode::CallSin: {
        double* __restrict a = slot(top - 1);
        for (std::size_t i = 0; i < n; ++i) a[i] = std::sin(a[i]);
        break;
      }
      case OpCode::CallCos: {
        double* __restrict a = slot(top - 1);
        for (std::size_t i = 0; i < n; ++i) a[i] = std::cos(a[i]);
        break;
      }
      case OpCode::CallSqrt: {
        double* __restrict a = slot(top - 1);
        for (std::size_t i = 0; i < n; ++i) a[i] = std::sqrt(a[i]);
        break;
      }
      case OpCode::CallAbs: {
        double* __restrict a = slot(top - 1);
        for (std::size_t i = 0; i < n; ++i) a[i] = std::fabs(a[i]);
        break;
      }
      case OpCode::CallSinh: {
        double* __restrict a = slot(top - 1);
        for (std::size_t i = 0; i < n; ++i) a[i] = std::sinh(a[i]);
        break;
      }
      case OpCode::CallAsinh: {
        double* __restrict a = slot(top - 1);
        for (std::size_t i = 0; i < n; ++i) a[i] = std::asinh(a[i]);
        break;
      }
    }
  }
  const double* __restrict res = slot(0);
  double* __restrict o = out.data();
  for (std::size_t i = 0; i < n; ++i) o[i] = res[i];
}

}  // namespace ffit::expr
