#include "bigg/row_forest.hpp"

#include <stdexcept>
#include <string>

namespace bigg {

std::size_t forest_update(RowForest& forest, const StatePair& g, const ParamStore& params,
                          const ModelOptions& opts) {
  DirectExec ex(params, opts);
  return forest.update(ex, g);
}

StatePair forest_summary(const RowForest& forest, NodeId u, NodeId n, const ParamStore& params,
                         const ModelOptions& opts, std::size_t* touched) {
  if (u != forest.size())
    throw std::invalid_argument("forest_summary: forest holds " + std::to_string(forest.size()) + " rows, not " +
                                std::to_string(u));
  DirectExec ex(params, opts);
  return forest.summary(ex, n, touched);
}

}  // namespace bigg
