#include "ffit/model.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "ffit/eval.hpp"

namespace ffit {

void Model::wire() {
  std::vector<NodeId> params = pdf.all_parameter_nodes();

  std::vector<NodeId> pdf_children{observable};
  pdf_children.insert(pdf_children.end(), params.begin(), params.end());
  pdf_node = graph.add_pdf_node(
      pdf.name + "_unnorm", std::move(pdf_children),
      [this](std::span<const double>) {
        return pdf.eval_unnorm(graph.node(observable).value, graph);
      });

  // Depends on parameters only: a constant branch that the dirty-flag
  // machinery recomputes once per parameter change, not per entry.
  norm_node = graph.add_function(pdf.name + "_norm", params,
                                 [this](std::span<const double>) {
                                   return normalization(pdf, obs_lower(), obs_upper(), graph);
                                 });

  prob_node = graph.add_function(pdf.name + "_prob", {pdf_node, norm_node},
                                 [](std::span<const double> c) { return c[0] / c[1]; });
}

std::vector<NodeId> Model::free_parameters() const {
  std::vector<NodeId> out;
  for (NodeId id = 0; id < graph.size(); ++id) {
    const Node& n = graph.node(id);
    if (n.kind == NodeKind::Parameter && !n.constant) out.push_back(id);
  }
  return out;
}

namespace {

[[noreturn]] void parse_fail(const std::string& origin, std::size_t line,
                             const std::string& what) {
  throw Error(ErrorCode::Data,
              origin + ":" + std::to_string(line) + ": " + what);
}

double to_double(const std::string& tok, const std::string& origin, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    parse_fail(origin, line, "expected a number, got '" + tok + "'");
  }
  return v;
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

// Splits "Kind(arg1, arg2, ...)" honoring one optional leading quoted
// string (the Expression formula, which may contain commas).
struct PdfCall {
  std::string kind;
  std::vector<std::string> args;
};

PdfCall parse_pdf_call(const std::string& text, const std::string& origin,
                       std::size_t line) {
  const std::size_t open = text.find('(');
  if (open == std::string::npos || text.back() != ')') {
    parse_fail(origin, line, "expected <Kind>(<args>) in pdf definition");
  }
  PdfCall call;
  call.kind = text.substr(0, open);
  std::string inner = text.substr(open + 1, text.size() - open - 2);
  std::size_t pos = 0;
  while (pos < inner.size()) {
    while (pos < inner.size() && (inner[pos] == ' ' || inner[pos] == '\t')) ++pos;
    if (pos >= inner.size()) break;
    std::string arg;
    if (inner[pos] == '"') {
      const std::size_t close = inner.find('"', pos + 1);
      if (close == std::string::npos) parse_fail(origin, line, "unterminated string");
      arg = inner.substr(pos + 1, close - pos - 1);
      pos = close + 1;
    } else {
      std::size_t end = inner.find(',', pos);
      if (end == std::string::npos) end = inner.size();
      arg = inner.substr(pos, end - pos);
      while (!arg.empty() && (arg.back() == ' ' || arg.back() == '\t')) arg.pop_back();
      pos = end;
    }
    call.args.push_back(arg);
    while (pos < inner.size() && (inner[pos] == ' ' || inner[pos] == '\t')) ++pos;
    if (pos < inner.size()) {
      if (inner[pos] != ',') parse_fail(origin, line, "expected ',' between arguments");
      ++pos;
    }
  }
  return call;
}

}  // namespace

std::unique_ptr<Model> Model::from_string(const std::string& text,
                                          const std::string& origin) {
  auto model = std::make_unique<Model>();
  Graph& g = model->graph;
  bool have_observable = false;
  std::map<std::string, PdfSpec> pdfs;
  std::string last_pdf;

  auto param_id = [&](const std::string& name, std::size_t line) {
    if (!g.has(name)) parse_fail(origin, line, "undeclared name: " + name);
    const NodeId id = g.id_of(name);
    if (g.node(id).kind != NodeKind::Parameter) {
      parse_fail(origin, line, "'" + name + "' is not a parameter");
    }
    return id;
  };

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::vector<std::string> toks = tokenize(line);
    if (toks.empty()) continue;

    if (toks[0] == "observable") {
      if (toks.size() != 4) parse_fail(origin, line_no, "observable <name> <lo> <hi>");
      if (have_observable) parse_fail(origin, line_no, "only one observable is supported");
      model->observable = g.add_observable(toks[1], to_double(toks[2], origin, line_no),
                                           to_double(toks[3], origin, line_no));
      have_observable = true;
    } else if (toks[0] == "parameter") {
      if (toks.size() != 5 && !(toks.size() == 6 && toks[5] == "const")) {
        parse_fail(origin, line_no, "parameter <name> <value> <lo> <hi> [const]");
      }
      g.add_parameter(toks[1], to_double(toks[2], origin, line_no),
                      to_double(toks[3], origin, line_no),
                      to_double(toks[4], origin, line_no), toks.size() == 6);
    } else if (toks[0] == "pdf") {
      if (toks.size() < 3) parse_fail(origin, line_no, "pdf <name> <Kind>(<args>)");
      if (!have_observable) parse_fail(origin, line_no, "observable must be declared before pdfs");
      std::string rest = toks[2];
      for (std::size_t i = 3; i < toks.size(); ++i) rest += " " + toks[i];
      const PdfCall call = parse_pdf_call(rest, origin, line_no);

      PdfSpec spec;
      spec.name = toks[1];
      spec.observable = model->observable;
      const std::string& obs_name = g.node(model->observable).name;

      auto expect_args = [&](std::size_t n) {
        if (call.args.size() != n) {
          parse_fail(origin, line_no, call.kind + " expects " + std::to_string(n) +
                                          " argument(s), got " +
                                          std::to_string(call.args.size()));
        }
      };
      auto expect_obs_first = [&] {
        if (call.args.empty() || call.args[0] != obs_name) {
          parse_fail(origin, line_no,
                     call.kind + ": first argument must be the observable '" + obs_name + "'");
        }
      };

      if (call.kind == "Gaussian") {
        expect_args(3);
        expect_obs_first();
        spec.kind = PdfKind::Gaussian;
        spec.parameters = {param_id(call.args[1], line_no), param_id(call.args[2], line_no)};
      } else if (call.kind == "Exponential") {
        expect_args(2);
        expect_obs_first();
        spec.kind = PdfKind::Exponential;
        spec.parameters = {param_id(call.args[1], line_no)};
      } else if (call.kind == "ChiSquare") {
        expect_args(2);
        expect_obs_first();
        spec.kind = PdfKind::ChiSquare;
        spec.parameters = {param_id(call.args[1], line_no)};
      } else if (call.kind == "JohnsonSU") {
        expect_args(5);
        expect_obs_first();
        spec.kind = PdfKind::JohnsonSU;
        spec.parameters = {param_id(call.args[1], line_no), param_id(call.args[2], line_no),
                           param_id(call.args[3], line_no), param_id(call.args[4], line_no)};
      } else if (call.kind == "WeightedSum") {
        // WeightedSum(c1, f1, c2, f2, ..., cn): components interleaved
        // with the n-1 free fractions.
        if (call.args.size() < 3 || call.args.size() % 2 == 0) {
          parse_fail(origin, line_no, "WeightedSum(c1, f1, c2, f2, ..., cn)");
        }
        spec.kind = PdfKind::WeightedSum;
        for (std::size_t i = 0; i < call.args.size(); ++i) {
          if (i % 2 == 0) {
            const auto it = pdfs.find(call.args[i]);
            if (it == pdfs.end()) {
              parse_fail(origin, line_no, "undeclared pdf: " + call.args[i]);
            }
            spec.components.push_back(it->second);
          } else {
            spec.fractions.push_back(param_id(call.args[i], line_no));
          }
        }
      } else if (call.kind == "Expression") {
        if (call.args.empty()) {
          parse_fail(origin, line_no, "Expression(\"<formula>\", <var>, ...)");
        }
        spec.kind = PdfKind::Expression;
        std::vector<std::string> vars(call.args.begin() + 1, call.args.end());
        for (const std::string& v : vars) {
          if (!g.has(v)) parse_fail(origin, line_no, "undeclared name: " + v);
          spec.expr_var_nodes.push_back(g.id_of(v));
        }
        try {
          spec.program = expr::compile(call.args[0], vars);
        } catch (const Error& e) {
          parse_fail(origin, line_no, e.what());
        }
      } else {
        parse_fail(origin, line_no, "unknown pdf kind: " + call.kind);
      }
      pdfs[spec.name] = spec;
      last_pdf = spec.name;
    } else {
      parse_fail(origin, line_no, "unknown directive: " + toks[0]);
    }
  }

  if (!have_observable) {
    throw Error(ErrorCode::Data, origin + ": no observable declared");
  }
  if (last_pdf.empty()) {
    throw Error(ErrorCode::Data, origin + ": no pdf declared");
  }
  model->pdf = pdfs[last_pdf];
  model->wire();
  return model;
}

std::unique_ptr<Model> Model::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::Data, "cannot open model file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str(), path);
}

}  // namespace ffit
