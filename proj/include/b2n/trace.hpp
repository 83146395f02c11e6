#pragma once

#include <string>
#include <vector>

#include "b2n/graph_io.hpp"

namespace b2n {

/// JSON-lines event log of a learning run.
class TraceLog {
 public:
  void emit(Json event) { lines_.push_back(event.dump()); }

  std::size_t size() const noexcept { return lines_.size(); }
  const std::vector<std::string>& lines() const noexcept { return lines_; }

  std::string text() const {
    std::string out;
    for (const auto& l : lines_) {
      out += l;
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<std::string> lines_;
};

inline Json ids_json(const MixedGraph& g, const NodeSet& s) {
  Json out = Json::array();
  for (NodeIndex v : s) out.push_back(g.node(v).id);
  return out;
}

}  // namespace b2n
