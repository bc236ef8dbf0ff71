#include "ers/parse.hpp"

#include <cctype>

namespace ers {

namespace {

bool self_delim(char c) {
  return c == '(' || c == ')' || c == '[' || c == ']' || c == ',' || c == '|';
}

bool space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

}  // namespace

std::vector<token> lex(const std::string& text, const std::string& file) {
  std::vector<token> out;
  int line = 1, col = 1;
  long prev_end = -2;
  std::size_t i = 0;
  auto advance = [&](char c) {
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  };
  while (i < text.size()) {
    char c = text[i];
    if (space(c)) {
      advance(c);
      ++i;
      continue;
    }
    if (text.compare(i, 3, "---") == 0 || text.compare(i, 3, "***") == 0) {
      while (i < text.size() && text[i] != '\n') {
        advance(text[i]);
        ++i;
      }
      continue;
    }
    token t;
    t.span = {file, line, col, 1};
    t.offset = static_cast<long>(i);
    if (self_delim(c)) {
      t.text = std::string(1, c);
      advance(c);
      ++i;
    } else {
      while (i < text.size() && !space(text[i]) && !self_delim(text[i])) {
        t.text += text[i];
        advance(text[i]);
        ++i;
      }
    }
    t.span.len = static_cast<int>(t.text.size());
    t.glued = t.offset == prev_end;
    prev_end = t.offset + static_cast<long>(t.text.size());
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

bool contains_bar(const std::vector<token>& body) {
  for (const auto& t : body)
    if (t.text == "|") return true;
  return false;
}

}  // namespace

std::vector<raw_module> split_modules(const std::vector<token>& toks,
                                      std::vector<diagnostic>& diags) {
  std::vector<raw_module> out;
  std::size_t i = 0;
  auto err = [&](source_span sp, std::string code, std::string msg) {
    diags.push_back(
        {severity::error, std::move(code), std::move(msg), std::move(sp)});
  };
  while (i < toks.size()) {
    if (toks[i].text != "mod") {
      err(toks[i].span, "E-TOPLEVEL",
          "expected `mod` at top level, found `" + toks[i].text + "`");
      while (i < toks.size() && toks[i].text != "mod") ++i;
      continue;
    }
    raw_module rm;
    rm.span = toks[i].span;
    ++i;
    if (i >= toks.size()) {
      err(toks.back().span, "E-MODULE-HEADER", "module name missing after `mod`");
      break;
    }
    rm.name = toks[i].text;
    rm.span = toks[i].span;
    ++i;
    if (i < toks.size() && toks[i].text == "is") {
      ++i;
    } else {
      err(rm.span, "E-MODULE-HEADER",
          "expected `is` after module name " + rm.name);
    }
    bool closed = false;
    while (i < toks.size()) {
      if (toks[i].text == "endm") {
        ++i;
        closed = true;
        break;
      }
      std::size_t kw = i;
      std::vector<token> body;
      bool terminated = false;
      while (i < toks.size() && toks[i].text != "endm") {
        if (toks[i].text == ".") {
          terminated = true;
          ++i;
          break;
        }
        body.push_back(toks[i]);
        ++i;
      }
      if (!terminated)
        err(toks[kw].span, "E-UNTERMINATED",
            "statement not terminated by ` .`");
      if (body.empty()) continue;

      const std::string& k = body[0].text;
      raw_stmt st;
      st.span = body[0].span;
      auto rest = [&] { st.toks.assign(body.begin() + 1, body.end()); };
      if (k == "plain" && body.size() == 1) {
        st.kind = stmt_kind::plain_marker;
      } else if (k == "sort" || k == "sorts") {
        st.kind = stmt_kind::sorts;
        rest();
      } else if (k == "subsort" || k == "subsorts") {
        st.kind = stmt_kind::subsorts;
        rest();
      } else if (k == "op" || k == "ops") {
        st.kind = stmt_kind::ops;
        rest();
      } else if (k == "var" || k == "vars") {
        st.kind = stmt_kind::vars;
        rest();
      } else if (k == "prop") {
        st.kind = stmt_kind::prop;
        rest();
      } else if (k == "eq" || k == "ceq") {
        st.kind = stmt_kind::eq;
        rest();
      } else if (k == "mb" || k == "cmb") {
        st.kind = stmt_kind::mb;
        rest();
      } else if (k == "rl" || k == "crl") {
        st.kind = stmt_kind::rule;
        rest();
      } else if (k == "pr" || k == "protecting") {
        st.kind =
            contains_bar(body) ? stmt_kind::compose : stmt_kind::import;
        rest();
      } else {
        err(body[0].span, "E-STMT", "unrecognized statement `" + k + "`");
        continue;
      }
      rm.stmts.push_back(std::move(st));
    }
    if (!closed)
      err(rm.span, "E-UNCLOSED-MODULE", "`endm` missing for module " + rm.name);
    out.push_back(std::move(rm));
  }
  return out;
}

}  // namespace ers
