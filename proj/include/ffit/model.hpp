#pragma once

#include <memory>
#include <string>

#include "ffit/dataset.hpp"
#include "ffit/graph.hpp"
#include "ffit/pdfs.hpp"

namespace ffit {

// A fit model: one graph holding observable, parameters and the PDF, plus
// the three derived nodes the likelihood engines traverse:
//   pdf_node  = unnormalized density at the observable's current value
//   norm_node = normalization integral, depending on parameters only
//               (a constant branch: recomputed once per parameter change)
//   prob_node = pdf_node / norm_node
//
// wire() installs closures that capture `this`; a Model must stay at a
// fixed address afterwards, so it is non-copyable and non-movable and
// normally lives behind a unique_ptr.
class Model {
 public:
  Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  Graph graph;
  PdfSpec pdf;
  NodeId observable = 0;
  NodeId pdf_node = 0;
  NodeId norm_node = 0;
  NodeId prob_node = 0;

  void wire();

  double obs_lower() const { return graph.node(observable).lower; }
  double obs_upper() const { return graph.node(observable).upper; }
  const std::string& obs_name() const { return graph.node(observable).name; }

  ObservableSpec obs_spec() const {
    return ObservableSpec{obs_name(), obs_lower(), obs_upper()};
  }

  // Non-constant parameter node ids, in declaration order.
  std::vector<NodeId> free_parameters() const;

  // Model-file grammar (see docs/model-file.md):
  //   observable <name> <lo> <hi>
  //   parameter <name> <value> <lo> <hi> [const]
  //   pdf <name> <Kind>(<arg>, ...)
  //   # comment
  // The last pdf line is the fit model.
  static std::unique_ptr<Model> from_file(const std::string& path);
  static std::unique_ptr<Model> from_string(const std::string& text,
                                            const std::string& origin = "<string>");
};

}  // namespace ffit
