#include "qhpc/doc.hpp"

#include <algorithm>

#include "qhpc/errors.hpp"
#include "qhpc/types.hpp"

namespace qhpc {

namespace {

struct RawLine {
  int no = 0;      // 1-based
  int indent = 0;  // leading spaces
  std::string content;  // comment-stripped, right-trimmed, non-empty
};

std::string strip_comment(const std::string& s) {
  // A '#' introduces a comment when it starts the content or follows a space.
  if (!s.empty() && s[0] == '#') return "";
  for (size_t i = 1; i < s.size(); ++i) {
    if (s[i] == '#' && s[i - 1] == ' ') return s.substr(0, i);
  }
  return s;
}

std::string rtrim(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
  return s;
}

std::vector<RawLine> lex(std::string_view text) {
  std::string norm;
  norm.reserve(text.size());
  size_t start = 0;
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB &&
      static_cast<unsigned char>(text[2]) == 0xBF) {
    start = 3;  // UTF-8 BOM
  }
  for (size_t i = start; i < text.size(); ++i) {
    if (text[i] == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;  // CRLF -> LF
      int line = 1 + static_cast<int>(std::count(norm.begin(), norm.end(), '\n'));
      throw ParseError(line, 1, "stray carriage return");
    }
    norm.push_back(text[i]);
  }

  std::vector<RawLine> out;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= norm.size()) {
    size_t eol = norm.find('\n', pos);
    std::string raw = norm.substr(pos, eol == std::string::npos ? std::string::npos
                                                                : eol - pos);
    ++line_no;
    pos = (eol == std::string::npos) ? norm.size() + 1 : eol + 1;

    int indent = 0;
    for (char c : raw) {
      if (c == ' ') {
        ++indent;
      } else if (c == '\t') {
        throw ParseError(line_no, indent + 1, "tab character in indentation");
      } else {
        break;
      }
    }
    std::string content = rtrim(strip_comment(raw.substr(indent)));
    if (content.empty()) continue;
    out.push_back(RawLine{line_no, indent, content});
  }
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<RawLine> lines) : lines_(std::move(lines)) {}

  DocNode parse_top() {
    if (lines_.empty()) {
      DocNode empty;
      empty.kind = DocNode::Kind::map;
      empty.line = 1;
      empty.column = 1;
      return empty;
    }
    if (lines_[0].indent != 0) {
      throw ParseError(lines_[0].no, lines_[0].indent + 1,
                       "top-level entry must not be indented");
    }
    DocNode root = parse_block(0);
    if (idx_ < lines_.size()) {
      const RawLine& l = lines_[idx_];
      throw ParseError(l.no, l.indent + 1, "inconsistent indentation");
    }
    if (root.kind != DocNode::Kind::map) {
      throw ParseError(lines_[0].no, 1, "document root must be a key/value map");
    }
    return root;
  }

 private:
  // Parses the block of sibling entries whose indent equals lines_[idx_].indent.
  // Stops at the first line with smaller indent.
  DocNode parse_block(int indent) {
    const RawLine& first = lines_[idx_];
    bool is_seq = first.content[0] == '-' &&
                  (first.content.size() == 1 || first.content[1] == ' ');
    DocNode node;
    node.kind = is_seq ? DocNode::Kind::seq : DocNode::Kind::map;
    node.line = first.no;
    node.column = indent + 1;

    while (idx_ < lines_.size()) {
      const RawLine& l = lines_[idx_];
      if (l.indent < indent) break;
      if (l.indent > indent) {
        throw ParseError(l.no, l.indent + 1, "inconsistent indentation");
      }
      bool line_is_item = l.content[0] == '-' &&
                          (l.content.size() == 1 || l.content[1] == ' ');
      if (line_is_item != is_seq) {
        throw ParseError(l.no, l.indent + 1,
                         is_seq ? "expected sequence item '- '"
                                : "unexpected sequence item in map block");
      }
      if (is_seq) {
        node.items.push_back(parse_seq_item(indent));
      } else {
        parse_map_entry(node, indent);
      }
    }
    return node;
  }

  void parse_map_entry(DocNode& map, int indent) {
    const RawLine& l = lines_[idx_];
    size_t colon = l.content.find(':');
    if (colon == std::string::npos) {
      throw ParseError(l.no, l.indent + 1, "expected 'key: value'");
    }
    std::string key = l.content.substr(0, colon);
    if (!is_valid_identifier(key)) {
      throw ParseError(l.no, l.indent + 1,
                       "invalid key '" + key + "' (allowed: [A-Za-z0-9_.-]+)");
    }
    for (const auto& [existing, value] : map.entries) {
      if (existing == key) {
        throw ParseError(l.no, l.indent + 1, "duplicate key '" + key + "'");
      }
    }

    std::string rest = l.content.substr(colon + 1);
    if (rest.empty()) {
      // Nested block follows on deeper-indented lines.
      ++idx_;
      if (idx_ >= lines_.size() || lines_[idx_].indent <= indent) {
        throw ParseError(l.no, static_cast<int>(indent + colon + 2),
                         "key '" + key + "' has no value");
      }
      map.entries.emplace_back(std::move(key), parse_block(lines_[idx_].indent));
      return;
    }
    if (rest[0] != ' ') {
      throw ParseError(l.no, static_cast<int>(indent + colon + 2),
                       "expected a space after ':'");
    }
    std::string value = rest.substr(1);
    // rtrim already ran, so a bare "key: " cannot reach here non-empty.
    DocNode scalar;
    scalar.kind = DocNode::Kind::scalar;
    scalar.line = l.no;
    scalar.column = static_cast<int>(indent + colon + 3);
    scalar.scalar = std::move(value);
    map.entries.emplace_back(std::move(key), std::move(scalar));
    ++idx_;
  }

  DocNode parse_seq_item(int indent) {
    const RawLine& l = lines_[idx_];
    if (l.content.size() < 2) {
      throw ParseError(l.no, l.indent + 1, "empty sequence item");
    }
    std::string body = l.content.substr(2);
    int item_indent = indent + 2;
    if (body.find(':') != std::string::npos && is_valid_identifier(body.substr(0, body.find(':')))) {
      // "- key: value" starts a map item; rewrite the line as the first map
      // entry at the item's indent and let the map block parser take over.
      lines_[idx_].indent = item_indent;
      lines_[idx_].content = std::move(body);
      return parse_block(item_indent);
    }
    // Plain scalar item.
    DocNode scalar;
    scalar.kind = DocNode::Kind::scalar;
    scalar.line = l.no;
    scalar.column = indent + 3;
    scalar.scalar = std::move(body);
    ++idx_;
    if (idx_ < lines_.size() && lines_[idx_].indent > indent) {
      const RawLine& next = lines_[idx_];
      throw ParseError(next.no, next.indent + 1,
                       "scalar sequence item cannot have nested lines");
    }
    return scalar;
  }

  std::vector<RawLine> lines_;
  size_t idx_ = 0;
};

}  // namespace

const DocNode* DocNode::find(std::string_view key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

DocNode parse_document(std::string_view text) {
  return Parser(lex(text)).parse_top();
}

}  // namespace qhpc
