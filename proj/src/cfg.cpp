#include "optbench/cfg.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "optbench/error.hpp"

namespace optbench {

std::string to_string(BlockKind k) {
  switch (k) {
    case BlockKind::Entry: return "Entry";
    case BlockKind::Exit: return "Exit";
    case BlockKind::Straight: return "Straight";
    case BlockKind::Branch: return "Branch";
    case BlockKind::LoopHead: return "LoopHead";
    case BlockKind::Call: return "Call";
  }
  return "Straight";
}

std::string to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::Fallthrough: return "Fallthrough";
    case EdgeKind::True: return "True";
    case EdgeKind::False: return "False";
    case EdgeKind::Back: return "Back";
  }
  return "Fallthrough";
}

int Cfg::out_degree(int id) const {
  return static_cast<int>(std::count_if(edges.begin(), edges.end(),
                                        [id](const CfgEdge& e) { return e.from == id; }));
}

std::size_t Cfg::count(BlockKind k) const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [k](const BasicBlock& b) { return b.kind == k; }));
}

std::size_t Cfg::count(EdgeKind k) const {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [k](const CfgEdge& e) { return e.kind == k; }));
}

namespace {

// ---------------------------------------------------------------- lexing

enum class TokKind { Ident, Number, Literal, Punct };

struct Token {
  TokKind kind;
  std::string text;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> toks;
  std::size_t i = 0;
  const std::size_t n = src.size();
  bool line_start = true;
  while (i < n) {
    char c = src[i];
    if (c == '\n') {
      line_start = true;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (line_start && c == '#') {
      // Preprocessor directive, including backslash continuations.
      while (i < n && src[i] != '\n') {
        if (src[i] == '\\' && i + 1 < n && src[i + 1] == '\n') ++i;
        ++i;
      }
      continue;
    }
    line_start = false;
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      std::size_t end = src.find("*/", i + 2);
      i = end == std::string_view::npos ? n : end + 2;
      continue;
    }
    if (c == 'R' && i + 1 < n && src[i + 1] == '"') {
      std::size_t open = src.find('(', i + 2);
      if (open != std::string_view::npos) {
        std::string close = ")" + std::string(src.substr(i + 2, open - i - 2)) + "\"";
        std::size_t end = src.find(close, open + 1);
        i = end == std::string_view::npos ? n : end + close.size();
        toks.push_back({TokKind::Literal, "\"\""});
        continue;
      }
    }
    if (c == '"' || c == '\'') {
      const char quote = c;
      ++i;
      while (i < n && src[i] != quote && src[i] != '\n') {
        if (src[i] == '\\') ++i;
        ++i;
      }
      if (i < n && src[i] == quote) ++i;
      toks.push_back({TokKind::Literal, quote == '"' ? "\"\"" : "''"});
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < n && ident_char(src[j])) ++j;
      // String literal prefixes (u8"..", L"..") fold into the literal.
      if (j < n && src[j] == '"' && (j - i) <= 2) {
        i = j;
        continue;
      }
      toks.push_back({TokKind::Ident, std::string(src.substr(i, j - i))});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i + 1;
      while (j < n) {
        char d = src[j];
        if (ident_char(d) || d == '.' || d == '\'') {
          ++j;
        } else if ((d == '+' || d == '-') &&
                   (src[j - 1] == 'e' || src[j - 1] == 'E' || src[j - 1] == 'p' ||
                    src[j - 1] == 'P')) {
          ++j;
        } else {
          break;
        }
      }
      toks.push_back({TokKind::Number, std::string(src.substr(i, j - i))});
      i = j;
      continue;
    }
    if (c == ':' && i + 1 < n && src[i + 1] == ':') {
      toks.push_back({TokKind::Punct, "::"});
      i += 2;
      continue;
    }
    toks.push_back({TokKind::Punct, std::string(1, c)});
    ++i;
  }
  return toks;
}

bool is_punct(const Token& t, char c) {
  return t.kind == TokKind::Punct && t.text.size() == 1 && t.text[0] == c;
}

// match[i] is the index of the bracket closing/opening tokens[i], or -1.
std::vector<int> match_brackets(const std::vector<Token>& toks) {
  std::vector<int> match(toks.size(), -1);
  std::vector<int> stack;
  for (int i = 0; i < static_cast<int>(toks.size()); ++i) {
    const Token& t = toks[i];
    if (t.kind != TokKind::Punct || t.text.size() != 1) continue;
    char c = t.text[0];
    if (c == '(' || c == '[' || c == '{') {
      stack.push_back(i);
    } else if (c == ')' || c == ']' || c == '}') {
      const char want = c == ')' ? '(' : c == ']' ? '[' : '{';
      if (stack.empty() || toks[stack.back()].text[0] != want)
        throw Error(ErrorKind::UnbalancedBraces,
                    "unmatched '" + std::string(1, c) + "' at token " + std::to_string(i));
      match[i] = stack.back();
      match[stack.back()] = i;
      stack.pop_back();
    }
  }
  if (!stack.empty())
    throw Error(ErrorKind::UnbalancedBraces,
                "unclosed '" + toks[stack.back()].text + "' at token " + std::to_string(stack.back()));
  return match;
}

const std::unordered_set<std::string>& control_keywords() {
  static const std::unordered_set<std::string> kw = {
      "if",     "else",    "while",  "for",     "do",       "switch",   "case",
      "default", "return", "break",  "continue", "goto",    "try",      "catch",
      "sizeof", "alignof", "decltype", "throw", "noexcept", "static_assert",
      "public", "private", "protected", "new",  "delete",   "operator", "typeid"};
  return kw;
}

// ------------------------------------------------------------- statements

struct Stmt {
  enum Kind { Simple, Block, If, Loop, Do, Switch, Case, Return, Break, Continue, Goto, Label, Try };
  Kind kind = Simple;
  std::vector<Stmt> children;
  std::string name;  // callee for Simple, label for Goto/Label
  bool is_default = false;
};

struct FunctionBody {
  int begin = 0;  // first token after '{'
  int end = 0;    // index of closing '}'
};

class Parser {
 public:
  Parser(const std::vector<Token>& toks, const std::vector<int>& match)
      : toks_(toks), match_(match) {}

  void discover(int b, int e) {
    int head_start = b;  // first token of the current declaration head
    for (int i = b; i < e; ++i) {
      const Token& t = toks_[i];
      if (is_punct(t, ';') || is_punct(t, '}')) {
        head_start = i + 1;
        continue;
      }
      if (!is_punct(t, '{')) {
        if (is_punct(t, '(') || is_punct(t, '[')) i = match_[i];
        continue;
      }
      const int close = match_[i];
      if (auto name = function_name_before(head_start, i)) {
        if (!functions_.count(*name)) {
          functions_[*name] = {i + 1, close};
          order_.push_back(*name);
        }
      } else if (is_scope_head(head_start, i)) {
        discover(i + 1, close);
      }
      i = close;
      head_start = close + 1;
    }
  }

  const std::map<std::string, FunctionBody>& functions() const { return functions_; }
  const std::vector<std::string>& order() const { return order_; }

  std::vector<Stmt> parse_range(int b, int e) {
    std::vector<Stmt> out;
    int i = b;
    while (i < e) out.push_back(parse_stmt(i, e));
    return out;
  }

 private:
  const std::vector<Token>& toks_;
  const std::vector<int>& match_;
  std::map<std::string, FunctionBody> functions_;
  std::vector<std::string> order_;

  bool ident_is(int i, int e, std::string_view s) const {
    return i < e && toks_[i].kind == TokKind::Ident && toks_[i].text == s;
  }
  bool punct_is(int i, int e, char c) const { return i < e && is_punct(toks_[i], c); }

  std::optional<std::string> function_name_before(int head_start, int brace) const {
    // Walk back over qualifiers / trailing return type to the parameter list.
    int j = brace - 1;
    int guard = 0;
    while (j >= head_start && guard++ < 24) {
      const Token& t = toks_[j];
      if (is_punct(t, ')')) break;
      const bool skippable = t.kind == TokKind::Ident || t.text == "::" || is_punct(t, '<') ||
                             is_punct(t, '>') || is_punct(t, '*') || is_punct(t, '&') ||
                             is_punct(t, ',') || is_punct(t, '-');
      if (!skippable) return std::nullopt;
      --j;
    }
    if (j < head_start || !is_punct(toks_[j], ')')) return std::nullopt;
    for (;;) {
      const int open = match_[j];
      if (open <= head_start) return std::nullopt;
      const Token& name = toks_[open - 1];
      if (name.kind != TokKind::Ident) return std::nullopt;
      if (name.text == "noexcept" || name.text == "throw") {
        j = open - 2;
        if (j < head_start || !is_punct(toks_[j], ')')) return std::nullopt;
        continue;
      }
      if (control_keywords().count(name.text)) return std::nullopt;
      return name.text;
    }
  }

  bool is_scope_head(int head_start, int brace) const {
    for (int j = head_start; j < brace; ++j) {
      if (toks_[j].kind != TokKind::Ident) continue;
      const std::string& s = toks_[j].text;
      if (s == "namespace" || s == "struct" || s == "class" || s == "union" || s == "extern")
        return true;
    }
    return false;
  }

  // Skips to just past the ';' ending a simple statement (balanced groups are
  // jumped over) or to `e` when the statement is unterminated.
  int skip_simple(int i, int e) const {
    while (i < e) {
      const Token& t = toks_[i];
      if (is_punct(t, ';')) return i + 1;
      if (is_punct(t, '(') || is_punct(t, '[') || is_punct(t, '{')) {
        i = match_[i] + 1;
        continue;
      }
      ++i;
    }
    return e;
  }

  std::string local_callee(int b, int e) const {
    for (int i = b; i + 1 < e; ++i) {
      if (toks_[i].kind == TokKind::Ident && is_punct(toks_[i + 1], '(') &&
          functions_.count(toks_[i].text))
        return toks_[i].text;
    }
    return {};
  }

  Stmt parse_body(int& i, int e) {
    if (i >= e) return Stmt{Stmt::Block, {}, {}, false};
    return parse_stmt(i, e);
  }

  Stmt parse_stmt(int& i, int e) {
    const Token& t = toks_[i];
    if (is_punct(t, '{')) {
      const int close = match_[i];
      Stmt s{Stmt::Block, parse_range(i + 1, close), {}, false};
      i = close + 1;
      return s;
    }
    if (is_punct(t, ';')) {
      ++i;
      return Stmt{Stmt::Block, {}, {}, false};
    }
    if (t.kind == TokKind::Ident) {
      const std::string& w = t.text;
      if (w == "if") {
        ++i;
        if (ident_is(i, e, "constexpr")) ++i;
        if (punct_is(i, e, '(')) i = match_[i] + 1;
        Stmt s{Stmt::If, {}, {}, false};
        s.children.push_back(parse_body(i, e));
        if (ident_is(i, e, "else")) {
          ++i;
          s.children.push_back(parse_body(i, e));
        }
        return s;
      }
      if (w == "while" || w == "for") {
        ++i;
        if (punct_is(i, e, '(')) i = match_[i] + 1;
        Stmt s{Stmt::Loop, {}, {}, false};
        s.children.push_back(parse_body(i, e));
        return s;
      }
      if (w == "do") {
        ++i;
        Stmt s{Stmt::Do, {}, {}, false};
        s.children.push_back(parse_body(i, e));
        if (ident_is(i, e, "while")) {
          ++i;
          if (punct_is(i, e, '(')) i = match_[i] + 1;
          if (punct_is(i, e, ';')) ++i;
        }
        return s;
      }
      if (w == "switch") {
        ++i;
        if (punct_is(i, e, '(')) i = match_[i] + 1;
        Stmt s{Stmt::Switch, {}, {}, false};
        s.children.push_back(parse_body(i, e));
        return s;
      }
      if (w == "case" || (w == "default" && punct_is(i + 1, e, ':'))) {
        Stmt s{Stmt::Case, {}, {}, w == "default"};
        ++i;
        while (i < e && !punct_is(i, e, ':')) {
          if (punct_is(i, e, '(') || punct_is(i, e, '[')) i = match_[i];
          ++i;
        }
        if (i < e) ++i;
        return s;
      }
      if (w == "return" || w == "throw") {
        i = skip_simple(i, e);
        return Stmt{Stmt::Return, {}, {}, false};
      }
      if (w == "break" || w == "continue") {
        i = skip_simple(i, e);
        return Stmt{w == "break" ? Stmt::Break : Stmt::Continue, {}, {}, false};
      }
      if (w == "goto") {
        std::string label = (i + 1 < e && toks_[i + 1].kind == TokKind::Ident) ? toks_[i + 1].text : "";
        i = skip_simple(i, e);
        return Stmt{Stmt::Goto, {}, label, false};
      }
      if (w == "try" && punct_is(i + 1, e, '{')) {
        ++i;
        Stmt s{Stmt::Try, {}, {}, false};
        s.children.push_back(parse_body(i, e));
        while (ident_is(i, e, "catch")) {
          ++i;
          if (punct_is(i, e, '(')) i = match_[i] + 1;
          s.children.push_back(parse_body(i, e));
        }
        return s;
      }
      if (w == "else") {  // stray else: ignore the keyword
        ++i;
        return Stmt{Stmt::Block, {}, {}, false};
      }
      if (punct_is(i + 1, e, ':') && !control_keywords().count(w)) {
        i += 2;
        return Stmt{Stmt::Label, {}, w, false};
      }
      if ((w == "public" || w == "private" || w == "protected") && punct_is(i + 1, e, ':')) {
        i += 2;
        return Stmt{Stmt::Block, {}, {}, false};
      }
      // Macro-style loops such as `rep(i, n) { ... }`.
      if (punct_is(i + 1, e, '(') && !control_keywords().count(w) && !functions_.count(w)) {
        const int close = match_[i + 1];
        if (punct_is(close + 1, e, '{')) {
          i = close + 1;
          Stmt s{Stmt::Loop, {}, {}, false};
          s.children.push_back(parse_body(i, e));
          return s;
        }
      }
    }
    const int start = i;
    i = skip_simple(i, e);
    if (i == start) ++i;  // never stall on a stray token
    return Stmt{Stmt::Simple, {}, local_callee(start, i), false};
  }
};

// -------------------------------------------------------------- lowering

class Lowerer {
 public:
  explicit Lowerer(Parser& parser) : parser_(parser) {
    add_node(BlockKind::Entry, 0);
    add_node(BlockKind::Exit, 0);
  }

  void lower_root(const std::vector<Stmt>& body, const std::string& name) {
    if (!name.empty()) heads_[name] = -1;  // the root is never re-entered as a callee
    FunctionState st;
    st.preds = {{kEntry, EdgeKind::Fallthrough}};
    lower_function(body, st);
  }

  Cfg finish() {
    // Keep only what is reachable from Entry (Exit is always kept).
    std::vector<std::vector<int>> succ(g_.nodes.size());
    for (const auto& e : g_.edges) succ[e.from].push_back(e.to);
    std::vector<bool> seen(g_.nodes.size(), false);
    std::vector<int> stack{kEntry};
    seen[kEntry] = true;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : succ[u])
        if (!seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
    }
    seen[kExit] = true;
    std::vector<int> remap(g_.nodes.size(), -1);
    Cfg out;
    for (std::size_t i = 0; i < g_.nodes.size(); ++i) {
      if (!seen[i]) continue;
      remap[i] = static_cast<int>(out.nodes.size());
      BasicBlock b = g_.nodes[i];
      b.id = remap[i];
      out.nodes.push_back(b);
    }
    std::set<std::tuple<int, int, int>> dedup;
    for (const auto& e : g_.edges) {
      if (!seen[e.from] || !seen[e.to]) continue;
      CfgEdge ne{remap[e.from], remap[e.to], e.kind};
      if (dedup.insert({ne.from, ne.to, static_cast<int>(ne.kind)}).second) out.edges.push_back(ne);
    }
    return out;
  }

 private:
  static constexpr int kEntry = 0;
  static constexpr int kExit = 1;

  struct Pred {
    int from;
    EdgeKind kind;
  };

  struct JumpCtx {
    bool is_switch = false;
    int continue_target = -1;
    EdgeKind continue_kind = EdgeKind::Back;
    std::vector<Pred> breaks;
  };

  struct FunctionState {
    std::vector<Pred> preds;
    int cur = -1;
    std::vector<JumpCtx> jumps;
    std::map<std::string, int> labels;
    std::vector<std::pair<std::vector<Pred>, std::string>> gotos;
  };

  Parser& parser_;
  Cfg g_;
  std::map<std::string, int> heads_;
  FunctionState* st_ = nullptr;

  int add_node(BlockKind kind, int stmts) {
    const int id = static_cast<int>(g_.nodes.size());
    g_.nodes.push_back({id, kind, stmts});
    return id;
  }

  void connect_preds(int to, std::optional<EdgeKind> force = std::nullopt) {
    for (const auto& p : st_->preds) g_.edges.push_back({p.from, to, force.value_or(p.kind)});
    st_->preds.clear();
  }

  int open_block() {
    if (st_->cur >= 0) return st_->cur;
    const int id = add_node(BlockKind::Straight, 0);
    connect_preds(id);
    st_->cur = id;
    return id;
  }

  void close() {
    if (st_->cur >= 0) {
      st_->preds = {{st_->cur, EdgeKind::Fallthrough}};
      st_->cur = -1;
    }
  }

  std::vector<Pred> take_preds() {
    close();
    auto p = std::move(st_->preds);
    st_->preds.clear();
    return p;
  }

  static bool is_empty(const Stmt& s) { return s.kind == Stmt::Block && s.children.empty(); }

  // Lowers a branch arm; returns the arm's exits.
  std::vector<Pred> lower_arm(const Stmt& s) {
    if (is_empty(s)) open_block();
    lower(s);
    return take_preds();
  }

  void lower_function(const std::vector<Stmt>& body, FunctionState& st) {
    FunctionState* saved = st_;
    st_ = &st;
    for (const auto& s : body) lower(s);
    close();
    connect_preds(kExit);
    for (auto& [preds, label] : st.gotos) {
      auto it = st.labels.find(label);
      const int target = it == st.labels.end() ? kExit : it->second;
      for (const auto& p : preds) g_.edges.push_back({p.from, target, p.kind});
    }
    st_ = saved;
  }

  int callee_head(const std::string& name) {
    if (auto it = heads_.find(name); it != heads_.end()) return it->second;
    const auto& fb = parser_.functions().at(name);
    const int head = add_node(BlockKind::Straight, 0);
    heads_[name] = head;
    auto body = parser_.parse_range(fb.begin, fb.end);
    FunctionState st;
    st.cur = head;
    lower_function(body, st);
    return head;
  }

  JumpCtx* innermost(bool want_loop) {
    for (auto it = st_->jumps.rbegin(); it != st_->jumps.rend(); ++it)
      if (!want_loop || !it->is_switch) return &*it;
    return nullptr;
  }

  void lower(const Stmt& s) {
    switch (s.kind) {
      case Stmt::Simple: {
        if (!s.name.empty()) {
          auto head_it = heads_.find(s.name);
          const bool is_root = head_it != heads_.end() && head_it->second < 0;
          if (!is_root) {
            close();
            const int call = add_node(BlockKind::Call, 1);
            connect_preds(call);
            const int head = callee_head(s.name);
            g_.edges.push_back({call, head, EdgeKind::Fallthrough});
            st_->preds = {{call, EdgeKind::Fallthrough}};
            return;
          }
        }
        g_.nodes[open_block()].stmt_count++;
        return;
      }
      case Stmt::Block:
        for (const auto& c : s.children) lower(c);
        return;
      case Stmt::If: {
        const int b = open_block();
        g_.nodes[b].kind = BlockKind::Branch;
        g_.nodes[b].stmt_count++;
        st_->cur = -1;
        st_->preds = {{b, EdgeKind::True}};
        auto exits = lower_arm(s.children[0]);
        st_->preds = {{b, EdgeKind::False}};
        if (s.children.size() > 1) {
          auto else_exits = lower_arm(s.children[1]);
          exits.insert(exits.end(), else_exits.begin(), else_exits.end());
        } else {
          exits.push_back({b, EdgeKind::False});
        }
        st_->preds = std::move(exits);
        return;
      }
      case Stmt::Loop: {
        close();
        const int head = add_node(BlockKind::LoopHead, 1);
        connect_preds(head);
        st_->jumps.push_back({false, head, EdgeKind::Back, {}});
        st_->preds = {{head, EdgeKind::True}};
        auto body_exits = lower_arm(s.children[0]);
        st_->preds = std::move(body_exits);
        connect_preds(head, EdgeKind::Back);
        auto breaks = std::move(st_->jumps.back().breaks);
        st_->jumps.pop_back();
        st_->preds = {{head, EdgeKind::False}};
        st_->preds.insert(st_->preds.end(), breaks.begin(), breaks.end());
        return;
      }
      case Stmt::Do: {
        close();
        const int start = add_node(BlockKind::Straight, 0);
        connect_preds(start);
        st_->cur = start;
        const int cond = add_node(BlockKind::LoopHead, 1);
        st_->jumps.push_back({false, cond, EdgeKind::Fallthrough, {}});
        lower(s.children[0]);
        close();
        connect_preds(cond);
        g_.edges.push_back({cond, start, EdgeKind::Back});
        auto breaks = std::move(st_->jumps.back().breaks);
        st_->jumps.pop_back();
        st_->preds = {{cond, EdgeKind::False}};
        st_->preds.insert(st_->preds.end(), breaks.begin(), breaks.end());
        return;
      }
      case Stmt::Switch: {
        const int head = open_block();
        g_.nodes[head].stmt_count++;
        close();
        const Stmt& body = s.children[0];
        const std::vector<Stmt> single{body};
        const std::vector<Stmt>& items = body.kind == Stmt::Block ? body.children : single;
        std::vector<int> tests;
        for (const auto& c : items)
          if (c.kind == Stmt::Case && !c.is_default) tests.push_back(add_node(BlockKind::Branch, 1));
        if (!tests.empty()) {
          connect_preds(tests.front());
          for (std::size_t k = 0; k + 1 < tests.size(); ++k)
            g_.edges.push_back({tests[k], tests[k + 1], EdgeKind::False});
        }
        const Pred no_match = tests.empty() ? st_->preds.empty() ? Pred{head, EdgeKind::Fallthrough}
                                                                 : st_->preds.front()
                                            : Pred{tests.back(), EdgeKind::False};
        st_->preds.clear();
        st_->jumps.push_back({true, -1, EdgeKind::Back, {}});
        std::size_t next_test = 0;
        bool saw_default = false;
        for (const auto& c : items) {
          if (c.kind == Stmt::Case) {
            close();
            if (c.is_default) {
              saw_default = true;
              st_->preds.push_back(no_match);
            } else {
              st_->preds.push_back({tests[next_test++], EdgeKind::True});
            }
            open_block();
            continue;
          }
          lower(c);
        }
        close();
        auto breaks = std::move(st_->jumps.back().breaks);
        st_->jumps.pop_back();
        st_->preds.insert(st_->preds.end(), breaks.begin(), breaks.end());
        if (!saw_default) st_->preds.push_back(no_match);
        return;
      }
      case Stmt::Case:
        return;  // only meaningful directly inside a switch body
      case Stmt::Return:
        g_.nodes[open_block()].stmt_count++;
        st_->preds = {{st_->cur, EdgeKind::Fallthrough}};
        st_->cur = -1;
        connect_preds(kExit);
        return;
      case Stmt::Break:
      case Stmt::Continue: {
        JumpCtx* ctx = innermost(s.kind == Stmt::Continue);
        g_.nodes[open_block()].stmt_count++;
        if (!ctx) return;
        auto preds = take_preds();
        if (s.kind == Stmt::Break) {
          ctx->breaks.insert(ctx->breaks.end(), preds.begin(), preds.end());
        } else {
          st_->preds = std::move(preds);
          connect_preds(ctx->continue_target, ctx->continue_kind);
        }
        return;
      }
      case Stmt::Goto:
        g_.nodes[open_block()].stmt_count++;
        st_->gotos.push_back({take_preds(), s.name});
        return;
      case Stmt::Label: {
        close();
        const int id = add_node(BlockKind::Straight, 0);
        connect_preds(id);
        st_->cur = id;
        st_->labels[s.name] = id;
        return;
      }
      case Stmt::Try: {
        const int b = open_block();
        g_.nodes[b].kind = BlockKind::Branch;
        g_.nodes[b].stmt_count++;
        st_->cur = -1;
        st_->preds = {{b, EdgeKind::True}};
        auto exits = lower_arm(s.children[0]);
        st_->preds = {{b, EdgeKind::False}};
        if (s.children.size() > 1) {
          open_block();
          for (std::size_t k = 1; k < s.children.size(); ++k) lower(s.children[k]);
          auto handler_exits = take_preds();
          exits.insert(exits.end(), handler_exits.begin(), handler_exits.end());
        } else {
          exits.push_back({b, EdgeKind::False});
        }
        st_->preds = std::move(exits);
        return;
      }
    }
  }
};

}  // namespace

Cfg build_cfg(std::string_view source) {
  const auto toks = lex(source);
  if (toks.empty()) throw Error(ErrorKind::EmptySource, "source has no code tokens");
  const auto match = match_brackets(toks);
  Parser parser(toks, match);
  parser.discover(0, static_cast<int>(toks.size()));
  Lowerer lowerer(parser);
  if (parser.functions().count("main")) {
    const auto& fb = parser.functions().at("main");
    lowerer.lower_root(parser.parse_range(fb.begin, fb.end), "main");
  } else if (!parser.order().empty()) {
    const auto& name = parser.order().front();
    const auto& fb = parser.functions().at(name);
    lowerer.lower_root(parser.parse_range(fb.begin, fb.end), name);
  } else {
    lowerer.lower_root(parser.parse_range(0, static_cast<int>(toks.size())), "");
  }
  return lowerer.finish();
}

std::string to_dot(const Cfg& cfg) {
  std::ostringstream os;
  os << "digraph cfg {\n";
  for (const auto& n : cfg.nodes)
    os << "  n" << n.id << " [label=\"" << n.id << ":" << to_string(n.kind) << "("
       << n.stmt_count << ")\"];\n";
  for (const auto& e : cfg.edges)
    os << "  n" << e.from << " -> n" << e.to << " [label=\"" << to_string(e.kind) << "\"];\n";
  os << "}\n";
  return os.str();
}

}  // namespace optbench
