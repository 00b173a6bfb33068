#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace crowdqc::markdown {

enum class NodeKind {
  document,
  heading,
  paragraph,
  bullet_list,
  ordered_list,
  list_item,
  code_block,
  text,
  emphasis,
  strong,
  code,
  link,
};

std::string_view to_string(NodeKind kind);

/// Sanitized rich-text tree. Leaves (text, code, code_block) carry `text`;
/// headings carry `level`; links carry a vetted `href`.
struct Node {
  NodeKind kind = NodeKind::document;
  std::string text;
  std::string href;
  int level = 0;
  std::vector<Node> children;

  bool operator==(const Node&) const = default;
};

/// CommonMark subset: ATX headings, paragraphs, bullet and ordered lists,
/// fenced code, emphasis, strong, code spans and inline links. Raw HTML tags
/// are dropped (their inner text kept) and links with script-capable schemes
/// are reduced to their text. Never throws; unmatched markup stays literal.
Node render(std::string_view text);

nlohmann::ordered_json to_json(const Node& node);

/// Escaped HTML for the rendered tree.
std::string to_html(const Node& node);

}  // namespace crowdqc::markdown
