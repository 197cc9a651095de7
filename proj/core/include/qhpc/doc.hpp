#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qhpc {

/// Node of a restricted indentation-based key/value document: a small,
/// deterministic subset of the usual data-serialization syntax. Supported:
/// nested maps, block sequences ("- item"), unquoted scalars, '#' comments.
/// Not supported on purpose: anchors, aliases, flow collections, quoting,
/// multi-document streams, tabs in indentation.
struct DocNode {
  enum class Kind { scalar, map, seq };

  Kind kind = Kind::scalar;
  int line = 0;    // 1-based source line this node starts on
  int column = 0;  // 1-based source column

  std::string scalar;                                    // Kind::scalar
  std::vector<std::pair<std::string, DocNode>> entries;  // Kind::map, in order
  std::vector<DocNode> items;                            // Kind::seq

  const DocNode* find(std::string_view key) const;  // nullptr when absent
};

/// Parse a document into a map node. Throws ParseError with 1-based
/// line/column on any syntax problem. CRLF line endings are normalized;
/// a leading UTF-8 BOM is accepted and skipped.
DocNode parse_document(std::string_view text);

}  // namespace qhpc
