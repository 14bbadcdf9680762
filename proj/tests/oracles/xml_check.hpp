#pragma once

// Minimal XML well-formedness check: balanced and properly nested tags,
// quoted attributes with unique names, known entities, a single root element.
// Enough for the generated SVG; no DTD or CDATA support.

#include <cctype>
#include <set>
#include <string>
#include <vector>

namespace oracle {

inline bool well_formed_xml(const std::string& doc, std::string* why = nullptr) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  auto name_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':' || c == '.';
  };
  std::vector<std::string> stack;
  int roots = 0;
  std::size_t i = 0;
  while (i < doc.size()) {
    if (doc[i] == '&') {
      const auto end = doc.find(';', i);
      if (end == std::string::npos) return fail("unterminated entity");
      const std::string ent = doc.substr(i + 1, end - i - 1);
      static const std::set<std::string> known{"amp", "lt", "gt", "quot", "apos"};
      if (!known.count(ent) && !(ent.size() > 1 && ent[0] == '#')) return fail("unknown entity " + ent);
      i = end + 1;
      continue;
    }
    if (doc[i] != '<') {
      if (stack.empty() && !std::isspace(static_cast<unsigned char>(doc[i]))) return fail("text outside the root");
      ++i;
      continue;
    }
    if (doc.compare(i, 4, "<!--") == 0) {
      const auto end = doc.find("-->", i + 4);
      if (end == std::string::npos) return fail("unterminated comment");
      i = end + 3;
      continue;
    }
    if (doc.compare(i, 2, "<?") == 0) {
      const auto end = doc.find("?>", i + 2);
      if (end == std::string::npos) return fail("unterminated declaration");
      i = end + 2;
      continue;
    }
    const bool closing = i + 1 < doc.size() && doc[i + 1] == '/';
    std::size_t j = i + (closing ? 2 : 1);
    std::string name;
    while (j < doc.size() && name_char(doc[j])) name += doc[j++];
    if (name.empty()) return fail("empty tag name");
    if (closing) {
      while (j < doc.size() && std::isspace(static_cast<unsigned char>(doc[j]))) ++j;
      if (j >= doc.size() || doc[j] != '>') return fail("malformed closing tag " + name);
      if (stack.empty() || stack.back() != name) return fail("mismatched closing tag " + name);
      stack.pop_back();
      i = j + 1;
      continue;
    }
    std::set<std::string> attrs;
    bool self_closing = false;
    for (;;) {
      while (j < doc.size() && std::isspace(static_cast<unsigned char>(doc[j]))) ++j;
      if (j >= doc.size()) return fail("unterminated tag " + name);
      if (doc[j] == '>') break;
      if (doc[j] == '/') {
        if (j + 1 >= doc.size() || doc[j + 1] != '>') return fail("stray / in " + name);
        self_closing = true;
        ++j;
        break;
      }
      std::string attr;
      while (j < doc.size() && name_char(doc[j])) attr += doc[j++];
      if (attr.empty()) return fail("bad attribute in " + name);
      if (!attrs.insert(attr).second) return fail("duplicate attribute " + attr);
      if (j >= doc.size() || doc[j] != '=') return fail("attribute without value: " + attr);
      ++j;
      if (j >= doc.size() || (doc[j] != '"' && doc[j] != '\'')) return fail("unquoted attribute " + attr);
      const char q = doc[j];
      const auto end = doc.find(q, j + 1);
      if (end == std::string::npos) return fail("unterminated attribute " + attr);
      if (doc.substr(j + 1, end - j - 1).find('<') != std::string::npos) return fail("< in attribute " + attr);
      j = end + 1;
    }
    if (stack.empty()) ++roots;
    if (roots > 1) return fail("more than one root element");
    if (!self_closing) stack.push_back(name);
    i = j + 1;
  }
  if (!stack.empty()) return fail("unclosed tag " + stack.back());
  if (roots != 1) return fail("no root element");
  return true;
}

}  // namespace oracle
