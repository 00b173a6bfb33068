#include "crowdqc/markdown.hpp"

#include <algorithm>
#include <cctype>

namespace crowdqc::markdown {

namespace {

bool is_ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return c == ' ' || c == '\t'; }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool safe_href(std::string_view href) {
  auto colon = href.find(':');
  if (colon == std::string_view::npos) return true;
  auto first_sep = href.find_first_of("/?#");
  if (first_sep != std::string_view::npos && first_sep < colon) return true;
  auto scheme = lower(href.substr(0, colon));
  return scheme == "http" || scheme == "https" || scheme == "mailto";
}

void append_text(std::vector<Node>& out, std::string_view text) {
  if (text.empty()) return;
  if (!out.empty() && out.back().kind == NodeKind::text) {
    out.back().text.append(text);
    return;
  }
  out.push_back(Node{NodeKind::text, std::string(text), {}, 0, {}});
}

void append_nodes(std::vector<Node>& out, std::vector<Node>&& more) {
  for (auto& n : more) {
    if (n.kind == NodeKind::text) {
      append_text(out, n.text);
    } else {
      out.push_back(std::move(n));
    }
  }
}

/// Length of a raw HTML construct starting at s[0] == '<', or 0 if it is not one.
std::size_t html_construct_length(std::string_view s) {
  if (s.substr(0, 4) == "<!--") {
    auto end = s.find("-->", 4);
    return end == std::string_view::npos ? 0 : end + 3;
  }
  std::size_t i = 1;
  if (i < s.size() && s[i] == '/') ++i;
  if (i >= s.size() || !std::isalpha(static_cast<unsigned char>(s[i]))) return 0;
  while (i < s.size() && (is_alnum(s[i]) || s[i] == '-')) ++i;
  if (i < s.size() && !(s[i] == '>' || s[i] == '/' || std::isspace(static_cast<unsigned char>(s[i])))) {
    return 0;
  }
  char quote = 0;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      return i + 1;
    } else if (c == '\n') {
      return 0;
    }
  }
  return 0;
}

/// Length of an autolink such as <https://example.org>, or 0.
std::size_t autolink_length(std::string_view s) {
  auto body = lower(s.substr(1, 8));
  if (body.rfind("http://", 0) != 0 && body.rfind("https://", 0) != 0) return 0;
  auto end = s.find('>');
  auto stop = s.find_first_of(" \t\n<", 1);
  if (end == std::string_view::npos || (stop != std::string_view::npos && stop < end)) return 0;
  return end + 1;
}

std::vector<Node> parse_inline(std::string_view s);

/// Position of the closing delimiter for an emphasis run, or npos.
std::size_t find_closer(std::string_view s, std::size_t from, std::string_view delim) {
  for (std::size_t i = from; i + delim.size() <= s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
      continue;
    }
    if (s[i] == '`') {
      auto end = s.find('`', i + 1);
      if (end != std::string_view::npos) i = end;
      continue;
    }
    if (s.compare(i, delim.size(), delim) != 0) continue;
    if (delim.size() == 1 && i + 1 < s.size() && s[i + 1] == delim[0]) {
      ++i;  // part of a double run
      continue;
    }
    if (i == from || is_space(s[i - 1])) continue;
    if (delim[0] == '_' && i + delim.size() < s.size() && is_alnum(s[i + delim.size()])) continue;
    return i;
  }
  return std::string_view::npos;
}

std::vector<Node> parse_inline(std::string_view s) {
  std::vector<Node> out;
  std::size_t i = 0;
  std::size_t literal_start = 0;
  auto flush = [&](std::size_t upto) {
    append_text(out, s.substr(literal_start, upto - literal_start));
  };

  while (i < s.size()) {
    char c = s[i];
    if (c == '\\' && i + 1 < s.size() && is_ascii_punct(s[i + 1])) {
      flush(i);
      append_text(out, s.substr(i + 1, 1));
      i += 2;
      literal_start = i;
      continue;
    }
    if (c == '`') {
      std::size_t run = 0;
      while (i + run < s.size() && s[i + run] == '`') ++run;
      std::string_view fence = s.substr(i, run);
      std::size_t search = i + run;
      std::size_t close = std::string_view::npos;
      while ((search = s.find(fence, search)) != std::string_view::npos) {
        std::size_t after = search + run;
        if (after < s.size() && s[after] == '`') {
          while (after < s.size() && s[after] == '`') ++after;
          search = after;
          continue;
        }
        close = search;
        break;
      }
      if (close == std::string_view::npos) {
        i += run;
        continue;
      }
      flush(i);
      std::string code(s.substr(i + run, close - i - run));
      std::replace(code.begin(), code.end(), '\n', ' ');
      if (code.size() >= 2 && code.front() == ' ' && code.back() == ' ' &&
          code.find_first_not_of(' ') != std::string::npos) {
        code = code.substr(1, code.size() - 2);
      }
      out.push_back(Node{NodeKind::code, std::move(code), {}, 0, {}});
      i = close + run;
      literal_start = i;
      continue;
    }
    if (c == '<') {
      auto rest = s.substr(i);
      if (auto len = autolink_length(rest); len > 0) {
        flush(i);
        std::string url(rest.substr(1, len - 2));
        out.push_back(Node{NodeKind::link, {}, url, 0, {Node{NodeKind::text, url, {}, 0, {}}}});
        i += len;
        literal_start = i;
        continue;
      }
      if (auto len = html_construct_length(rest); len > 0) {
        flush(i);
        i += len;
        literal_start = i;
        continue;
      }
      ++i;
      continue;
    }
    if (c == '[') {
      int depth = 0;
      std::size_t j = i;
      for (; j < s.size(); ++j) {
        if (s[j] == '\\') {
          ++j;
          continue;
        }
        if (s[j] == '[') ++depth;
        if (s[j] == ']' && --depth == 0) break;
      }
      if (j < s.size() && j + 1 < s.size() && s[j + 1] == '(') {
        auto close = s.find(')', j + 2);
        if (close != std::string_view::npos) {
          std::string_view target = s.substr(j + 2, close - j - 2);
          while (!target.empty() && is_space(target.front())) target.remove_prefix(1);
          auto sp = target.find_first_of(" \t");
          std::string_view href = target.substr(0, sp);
          if (href.size() >= 2 && href.front() == '<' && href.back() == '>') {
            href = href.substr(1, href.size() - 2);
          }
          flush(i);
          auto label = parse_inline(s.substr(i + 1, j - i - 1));
          if (safe_href(href)) {
            out.push_back(Node{NodeKind::link, {}, std::string(href), 0, std::move(label)});
          } else {
            append_nodes(out, std::move(label));
          }
          i = close + 1;
          literal_start = i;
          continue;
        }
      }
      ++i;
      continue;
    }
    if (c == '*' || c == '_') {
      bool dbl = i + 1 < s.size() && s[i + 1] == c;
      std::string delim(dbl ? 2 : 1, c);
      bool can_open = i + delim.size() < s.size() && !is_space(s[i + delim.size()]) &&
                      !(c == '_' && i > 0 && is_alnum(s[i - 1]));
      if (can_open) {
        auto close = find_closer(s, i + delim.size(), delim);
        if (close != std::string_view::npos) {
          flush(i);
          auto inner = parse_inline(s.substr(i + delim.size(), close - i - delim.size()));
          out.push_back(Node{dbl ? NodeKind::strong : NodeKind::emphasis, {}, {}, 0, std::move(inner)});
          i = close + delim.size();
          literal_start = i;
          continue;
        }
      }
      i += delim.size();
      continue;
    }
    ++i;
  }
  flush(s.size());
  return out;
}

struct Line {
  std::string_view text;
  std::size_t indent = 0;
};

std::size_t leading_spaces(std::string_view s) {
  std::size_t n = 0;
  while (n < s.size() && s[n] == ' ') ++n;
  return n;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
}

/// Returns the fence string if the line opens or closes a code fence.
std::string_view fence_of(std::string_view line) {
  auto ind = leading_spaces(line);
  if (ind > 3) return {};
  auto rest = line.substr(ind);
  if (rest.size() < 3) return {};
  char f = rest[0];
  if (f != '`' && f != '~') return {};
  std::size_t n = 0;
  while (n < rest.size() && rest[n] == f) ++n;
  if (n < 3) return {};
  return rest.substr(0, n);
}

int heading_level(std::string_view line, std::string_view& content) {
  auto ind = leading_spaces(line);
  if (ind > 3) return 0;
  auto rest = line.substr(ind);
  int level = 0;
  while (level < static_cast<int>(rest.size()) && rest[level] == '#') ++level;
  if (level == 0 || level > 6) return 0;
  if (static_cast<std::size_t>(level) < rest.size() && !is_space(rest[level])) return 0;
  content = rest.substr(level);
  while (!content.empty() && is_space(content.front())) content.remove_prefix(1);
  while (!content.empty() && is_space(content.back())) content.remove_suffix(1);
  auto hashes = content.find_last_not_of('#');
  if (hashes == std::string_view::npos) {
    content = {};
  } else if (hashes + 1 < content.size() && is_space(content[hashes])) {
    content = content.substr(0, hashes);
    while (!content.empty() && is_space(content.back())) content.remove_suffix(1);
  }
  return level;
}

/// 0 = not a list item, 1 = bullet, 2 = ordered. `content` gets the item text.
int list_marker(std::string_view line, std::string_view& content) {
  auto ind = leading_spaces(line);
  if (ind > 3) return 0;
  auto rest = line.substr(ind);
  if (rest.empty()) return 0;
  std::size_t marker_len = 0;
  int kind = 0;
  if (rest[0] == '-' || rest[0] == '*' || rest[0] == '+') {
    marker_len = 1;
    kind = 1;
  } else {
    std::size_t d = 0;
    while (d < rest.size() && d < 9 && std::isdigit(static_cast<unsigned char>(rest[d]))) ++d;
    if (d == 0 || d >= rest.size() || (rest[d] != '.' && rest[d] != ')')) return 0;
    marker_len = d + 1;
    kind = 2;
  }
  if (marker_len < rest.size() && !is_space(rest[marker_len])) return 0;
  content = rest.substr(marker_len);
  while (!content.empty() && is_space(content.front())) content.remove_prefix(1);
  if (kind == 1 && content.empty()) return 0;
  // A thematic-break-looking line such as "- - -" or "***" is not a list.
  if (kind == 1) {
    auto trimmed = rest;
    bool only_marks = std::all_of(trimmed.begin(), trimmed.end(),
                                  [&](char ch) { return ch == rest[0] || is_space(ch); });
    if (only_marks) return 0;
  }
  return kind;
}

bool starts_block(std::string_view line) {
  std::string_view tmp;
  return !fence_of(line).empty() || heading_level(line, tmp) > 0 || list_marker(line, tmp) > 0;
}

Node paragraph(const std::string& text) {
  Node p{NodeKind::paragraph, {}, {}, 0, parse_inline(text)};
  return p;
}

std::string strip_line(std::string_view line) {
  auto s = line.substr(std::min(leading_spaces(line), line.size()));
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::document: return "document";
    case NodeKind::heading: return "heading";
    case NodeKind::paragraph: return "paragraph";
    case NodeKind::bullet_list: return "bullet_list";
    case NodeKind::ordered_list: return "ordered_list";
    case NodeKind::list_item: return "list_item";
    case NodeKind::code_block: return "code_block";
    case NodeKind::text: return "text";
    case NodeKind::emphasis: return "emphasis";
    case NodeKind::strong: return "strong";
    case NodeKind::code: return "code";
    case NodeKind::link: return "link";
  }
  return "text";
}

Node render(std::string_view text) {
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start <= text.size();) {
    auto nl = text.find('\n', start);
    auto end = nl == std::string_view::npos ? text.size() : nl;
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }

  Node doc;
  std::size_t i = 0;
  while (i < lines.size()) {
    auto line = lines[i];
    if (is_blank(line)) {
      ++i;
      continue;
    }
    if (auto fence = fence_of(line); !fence.empty()) {
      std::string body;
      std::size_t j = i + 1;
      for (; j < lines.size(); ++j) {
        auto close = fence_of(lines[j]);
        if (!close.empty() && close[0] == fence[0] && close.size() >= fence.size() &&
            is_blank(lines[j].substr(leading_spaces(lines[j]) + close.size()))) {
          break;
        }
        body.append(lines[j]);
        body.push_back('\n');
      }
      doc.children.push_back(Node{NodeKind::code_block, std::move(body), {}, 0, {}});
      i = j < lines.size() ? j + 1 : j;
      continue;
    }
    std::string_view content;
    if (int level = heading_level(line, content); level > 0) {
      doc.children.push_back(Node{NodeKind::heading, {}, {}, level, parse_inline(content)});
      ++i;
      continue;
    }
    if (int kind = list_marker(line, content); kind > 0) {
      Node list{kind == 1 ? NodeKind::bullet_list : NodeKind::ordered_list, {}, {}, 0, {}};
      while (i < lines.size()) {
        std::string_view item_text;
        if (list_marker(lines[i], item_text) != kind) break;
        std::string buf(item_text);
        ++i;
        while (i < lines.size() && !is_blank(lines[i])) {
          std::string_view tmp;
          bool continuation = leading_spaces(lines[i]) >= 2 || !starts_block(lines[i]);
          if (!continuation || (list_marker(lines[i], tmp) > 0 && leading_spaces(lines[i]) < 2)) break;
          buf.push_back('\n');
          buf += strip_line(lines[i]);
          ++i;
        }
        list.children.push_back(Node{NodeKind::list_item, {}, {}, 0, {paragraph(buf)}});
        // Blank lines between items of the same list keep the list open.
        std::size_t k = i;
        while (k < lines.size() && is_blank(lines[k])) ++k;
        std::string_view peek;
        if (k > i && k < lines.size() && list_marker(lines[k], peek) == kind) i = k;
      }
      doc.children.push_back(std::move(list));
      continue;
    }
    std::string buf = strip_line(line);
    ++i;
    while (i < lines.size() && !is_blank(lines[i]) && !starts_block(lines[i])) {
      buf.push_back('\n');
      buf += strip_line(lines[i]);
      ++i;
    }
    auto p = paragraph(buf);
    if (!p.children.empty()) doc.children.push_back(std::move(p));
  }
  return doc;
}

nlohmann::ordered_json to_json(const Node& node) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["type"] = std::string(to_string(node.kind));
  switch (node.kind) {
    case NodeKind::text:
    case NodeKind::code:
    case NodeKind::code_block:
      j["text"] = node.text;
      return j;
    case NodeKind::heading:
      j["level"] = node.level;
      break;
    case NodeKind::link:
      j["href"] = node.href;
      break;
    default:
      break;
  }
  auto children = nlohmann::ordered_json::array();
  for (const auto& c : node.children) children.push_back(to_json(c));
  j["children"] = std::move(children);
  return j;
}

namespace {

void escape_into(std::string& out, std::string_view s) {
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
}

void html_into(std::string& out, const Node& n) {
  auto children = [&] {
    for (const auto& c : n.children) html_into(out, c);
  };
  switch (n.kind) {
    case NodeKind::document: children(); break;
    case NodeKind::heading: {
      auto tag = "h" + std::to_string(n.level);
      out += "<" + tag + ">";
      children();
      out += "</" + tag + ">\n";
      break;
    }
    case NodeKind::paragraph: out += "<p>"; children(); out += "</p>\n"; break;
    case NodeKind::bullet_list: out += "<ul>\n"; children(); out += "</ul>\n"; break;
    case NodeKind::ordered_list: out += "<ol>\n"; children(); out += "</ol>\n"; break;
    case NodeKind::list_item: {
      out += "<li>";
      for (const auto& c : n.children) {
        if (c.kind == NodeKind::paragraph) {
          for (const auto& cc : c.children) html_into(out, cc);
        } else {
          html_into(out, c);
        }
      }
      out += "</li>\n";
      break;
    }
    case NodeKind::code_block: out += "<pre><code>"; escape_into(out, n.text); out += "</code></pre>\n"; break;
    case NodeKind::text: escape_into(out, n.text); break;
    case NodeKind::emphasis: out += "<em>"; children(); out += "</em>"; break;
    case NodeKind::strong: out += "<strong>"; children(); out += "</strong>"; break;
    case NodeKind::code: out += "<code>"; escape_into(out, n.text); out += "</code>"; break;
    case NodeKind::link:
      out += "<a href=\"";
      escape_into(out, n.href);
      out += "\">";
      children();
      out += "</a>";
      break;
  }
}

}  // namespace

std::string to_html(const Node& node) {
  std::string out;
  html_into(out, node);
  return out;
}

}  // namespace crowdqc::markdown
