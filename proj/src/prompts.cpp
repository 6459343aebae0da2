#include "optbench/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>

#include <nlohmann/json.hpp>

#include "optbench/error.hpp"
#include "optbench/util.hpp"

namespace optbench {

namespace {

struct Default {
  TemplateName name;
  const char* id;
  const char* body;
  std::vector<std::string> expected;
};

const std::vector<Default>& defaults() {
  static const std::vector<Default> d = {
      {TemplateName::Instruct, "Instruct",
       "Given the program below, improve its performance:\n\n"
       "### Program:\n{slow_code}\n\n"
       "### Optimized Version:\n",
       {section::Code}},
      {TemplateName::ChainOfThought, "ChainOfThought",
       "Given the program, generate an efficiency improvement strategy to enhance its performance.\n\n"
       "### slower program:\n{slow_code}\n\n"
       "### strategy:\n",
       {section::Strategy}},
      {TemplateName::Inference, "Inference",
       "Given the program below, improve its performance:\n\n"
       "### Program:\n{slow_code}\n\n"
       "### Optimized Version:\n",
       {section::Code}},
      {TemplateName::AnchorStage1, "AnchorStage1",
       "Given the program below, please explain and analyze its functionality, and provide 3 "
       "testcase inputs that fully consider boundary conditions and code coverage. Note that only "
       "the testcase inputs are required.\n\n"
       "### Program:\n{slow_code}\n\n"
       "### Explanation:\n{Your explanation here}\n\n"
       "### Test case Inputs:\n{Your testcase inputs}\n",
       {section::Explanation, section::TestInputs}},
      {TemplateName::AnchorStage3Refine, "AnchorStage3Refine",
       "You are a code expert, and your task is to correct the functionally incorrect code based "
       "on test cases and execution feedback. Analyze the issues, apply the necessary fixes, and "
       "ensure the corrected code meets the expected functionality and pass the testcase.\n\n"
       "### Incorrect Program:\n{code}\n\n"
       "### Explanation:\n{explanation}\n\n"
       "### Testcase:\n{Testcase}\n\n"
       "### Feedback from execution:\n{Feedback}\n\n"
       "### Your corrected code version:\n",
       {section::Code}},
      {TemplateName::SelfDebugging, "SelfDebugging",
       "Below is a potentially problematic C++ program. Please provide a line-by-line "
       "explanation and correct any errors that may be present.\n\n"
       "### Program:\n{program}\n\n"
       "### Explanation:\n{Your explanation here}\n\n"
       "### Revised Program:\n{Your revised program here}\n",
       {section::Explanation, section::Code}},
      {TemplateName::DirectTestGeneration, "DirectTestGeneration",
       "Given the program below, please explain and analyze its functionality, and generate three "
       "comprehensive test cases that thoroughly cover boundary conditions and all code paths. "
       "Each testcase should include the input and the corresponding expected output.\n\n"
       "### Program:\n{slow_code}\n\n"
       "### Explanation:\n{Your explanation here}\n\n"
       "### Test case:\n{Your testcase}\n",
       {section::Explanation, section::TestCases}},
      {TemplateName::ComparisonGroupOutputs, "ComparisonGroupOutputs",
       "Given the program below and one test case input, predict exactly what the program prints "
       "for that input. Only the output is required.\n\n"
       "### Program:\n{slow_code}\n\n"
       "### Test case Input:\n{test_input}\n\n"
       "### Output:\n{Your predicted output}\n",
       {section::Output}},
      {TemplateName::OptTypeClassify, "OptTypeClassify",
       "Below are a slower program and a faster program solving the same problem. Classify the "
       "main change that makes the faster program faster as one of: Global Algorithmic "
       "Optimization (the algorithm or its complexity changes), Local Optimization (same "
       "algorithm, cheaper statements, I/O or data structures), Other (cleanup or unrelated "
       "edits). Answer with the category name only.\n\n"
       "### Slower program:\n{slow_code}\n\n"
       "### Faster program:\n{fast_code}\n\n"
       "### Label:\n{Your category}\n",
       {section::Label}},
  };
  return d;
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Length of a `{identifier}` placeholder starting at s[i], or 0.
std::size_t placeholder_len(const std::string& s, std::size_t i) {
  if (s[i] != '{' || i + 1 >= s.size() || !is_ident_start(s[i + 1])) return 0;
  std::size_t j = i + 2;
  while (j < s.size() && is_ident(s[j])) ++j;
  return (j < s.size() && s[j] == '}') ? j - i + 1 : 0;
}

}  // namespace

std::string to_string(TemplateName n) {
  for (const auto& d : defaults())
    if (d.name == n) return d.id;
  return "Instruct";
}

TemplateName parse_template_name(const std::string& s) {
  for (const auto& d : defaults())
    if (to_lower(d.id) == to_lower(s)) return d.name;
  throw Error(ErrorKind::UnknownTemplate, "unknown prompt template '" + s + "'");
}

const std::vector<TemplateName>& all_templates() {
  static const std::vector<TemplateName> all = [] {
    std::vector<TemplateName> v;
    for (const auto& d : defaults()) v.push_back(d.name);
    return v;
  }();
  return all;
}

std::vector<std::string> placeholders(const std::string& body) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (std::size_t len = placeholder_len(body, i)) {
      std::string name = body.substr(i + 1, len - 2);
      if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
      i += len - 1;
    }
  }
  return out;
}

std::string render(const PromptTemplate& t, const Bindings& bindings) {
  std::string out;
  out.reserve(t.body.size());
  for (std::size_t i = 0; i < t.body.size();) {
    if (std::size_t len = placeholder_len(t.body, i)) {
      const std::string name = t.body.substr(i + 1, len - 2);
      auto it = bindings.find(name);
      if (it == bindings.end())
        throw Error(ErrorKind::UnboundPlaceholder,
                    "template " + to_string(t.name) + " needs a value for {" + name + "}");
      out += it->second;
      i += len;
    } else {
      out += t.body[i++];
    }
  }
  return out;
}

std::string bindings_sha256(const Bindings& bindings) {
  return sha256_hex(nlohmann::json(bindings).dump());
}

TemplateRegistry::TemplateRegistry() {
  for (const auto& d : defaults()) templates_[d.name] = PromptTemplate{d.name, d.body, d.expected};
}

const PromptTemplate& TemplateRegistry::get(TemplateName name) const { return templates_.at(name); }

void TemplateRegistry::override_body(TemplateName name, std::string body) {
  templates_.at(name).body = std::move(body);
}

std::vector<TemplateName> TemplateRegistry::load_overrides(const std::filesystem::path& dir) {
  std::vector<TemplateName> done;
  for (const auto& d : defaults()) {
    const auto path = dir / (std::string(d.id) + ".txt");
    if (std::filesystem::is_regular_file(path)) {
      override_body(d.name, read_file(path.string()));
      done.push_back(d.name);
    }
  }
  return done;
}

// ---------------------------------------------------------------- parsing

const std::string& ParsedResponse::get(const std::string& label) const {
  auto it = sections.find(label);
  if (it == sections.end()) throw Error(ErrorKind::MissingSection, "reply has no " + label + " section");
  return it->second;
}

namespace {

std::string normalize_label(const std::string& text) {
  std::string out;
  bool space = false;
  for (char c : text) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      if (space && !out.empty()) out += ' ';
      space = false;
      out += static_cast<char>(std::tolower(u));
    } else {
      space = true;
    }
  }
  return out;
}

const std::map<std::string, std::string>& synonyms() {
  static const std::map<std::string, std::string> m = {
      {"explanation", section::Explanation},
      {"analysis", section::Explanation},
      {"explanation and analysis", section::Explanation},
      {"test case inputs", section::TestInputs},
      {"testcase inputs", section::TestInputs},
      {"test inputs", section::TestInputs},
      {"test case input", section::TestInputs},
      {"testcase input", section::TestInputs},
      {"test input", section::TestInputs},
      {"inputs", section::TestInputs},
      {"test case", section::TestCases},
      {"test cases", section::TestCases},
      {"testcase", section::TestCases},
      {"testcases", section::TestCases},
      {"verified test cases", section::TestCases},
      {"optimized version", section::Code},
      {"optimized program", section::Code},
      {"optimized code", section::Code},
      {"optimised version", section::Code},
      {"revised program", section::Code},
      {"revised code", section::Code},
      {"corrected code", section::Code},
      {"corrected program", section::Code},
      {"corrected code version", section::Code},
      {"your corrected code version", section::Code},
      {"fixed program", section::Code},
      {"fixed code", section::Code},
      {"code", section::Code},
      {"strategy", section::Strategy},
      {"optimization strategy", section::Strategy},
      {"output", section::Output},
      {"outputs", section::Output},
      {"expected output", section::Output},
      {"predicted output", section::Output},
      {"label", section::Label},
      {"category", section::Label},
      {"optimization type", section::Label},
  };
  return m;
}

bool is_fence(const std::string& line) {
  const std::string t = trim(line);
  return t.rfind("```", 0) == 0 || t.rfind("~~~", 0) == 0;
}

// Sub-headers such as "Test case 2 input:" belong inside a section.
bool is_case_marker(const std::string& norm) {
  static const std::regex re(R"(^(test ?case|case|input|output|test)( \d+)?( (input|output))?( \d+)?$)");
  return std::regex_match(norm, re) && norm.find_first_of("0123456789") != std::string::npos;
}

bool is_io_marker_head(const std::string& norm) {
  static const std::regex head_re(
      R"(^(test ?case( \d+)?( (input|output))?|case \d+( (input|output))?|(expected |sample )?(input|output)( \d+)?)$)");
  return std::regex_match(norm, head_re);
}

struct Heading {
  std::string text;
  std::string inline_body;  // "**Explanation:** short" carries "short"
};

// Returns the heading text when `line` is a section heading.
std::optional<std::string> heading_text(const std::string& line) {
  const std::string t = trim(line);
  if (t.empty()) return std::nullopt;
  std::string text;
  const bool markdown = t[0] == '#';
  if (markdown) {
    std::size_t i = 0;
    while (i < t.size() && t[i] == '#') ++i;
    if (i > 6 || i >= t.size() || !std::isspace(static_cast<unsigned char>(t[i]))) return std::nullopt;
    text = trim(t.substr(i));
  } else if (t.size() > 4 && t.rfind("**", 0) == 0 &&
             (t.compare(t.size() - 2, 2, "**") == 0 || t.compare(t.size() - 3, 3, "**:") == 0)) {
    text = t;
    text.erase(std::remove(text.begin(), text.end(), '*'), text.end());
    text = trim(text);
    if (text.empty() || text.back() != ':') {
      // Bold line without a colon only counts for known labels.
      if (!synonyms().count(normalize_label(text))) return std::nullopt;
    }
  } else if (t.back() == ':') {
    text = t;
    if (!synonyms().count(normalize_label(text))) return std::nullopt;
  } else {
    return std::nullopt;
  }
  while (!text.empty() && (text.back() == ':' || std::isspace(static_cast<unsigned char>(text.back()))))
    text.pop_back();
  const std::string norm = normalize_label(text);
  if (norm.empty() || is_case_marker(norm)) return std::nullopt;
  // Plain "Input:" / "Output:" lines delimit test cases, not sections.
  if (!markdown && is_io_marker_head(norm)) return std::nullopt;
  return text;
}

std::optional<Heading> heading_of(const std::string& line) {
  if (auto h = heading_text(line)) return Heading{*h, ""};
  const std::string t = trim(line);
  if (t.rfind("**", 0) != 0) return std::nullopt;
  const std::size_t close = t.find("**", 2);
  if (close == std::string::npos || close + 2 >= t.size()) return std::nullopt;
  std::string label = trim(t.substr(2, close - 2));
  std::string rest = t.substr(close + 2);
  const bool colon_inside = !label.empty() && label.back() == ':';
  if (!colon_inside && (rest.empty() || rest[0] != ':')) return std::nullopt;
  if (!colon_inside) rest.erase(0, 1);
  while (!label.empty() && label.back() == ':') label.pop_back();
  if (!synonyms().count(normalize_label(label))) return std::nullopt;
  return Heading{trim(label), trim(rest)};
}

std::string trim_blank_lines(const std::vector<std::string>& lines, std::size_t b, std::size_t e) {
  while (b < e && trim(lines[b]).empty()) ++b;
  while (e > b && trim(lines[e - 1]).empty()) --e;
  std::string out;
  for (std::size_t i = b; i < e; ++i) {
    if (i > b) out += '\n';
    out += rtrim_newlines(lines[i]);
  }
  // Trailing spaces on the last line carry no meaning.
  while (!out.empty() && (out.back() == ' ' || out.back() == '\t')) out.pop_back();
  return out;
}

struct Fence {
  std::string content;
};

std::vector<Fence> fenced_blocks(const std::string& text) {
  std::vector<Fence> out;
  const auto lines = split_lines(text);
  std::size_t start = 0;
  bool open = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!is_fence(lines[i])) continue;
    if (!open) {
      open = true;
      start = i + 1;
    } else {
      open = false;
      std::string content;
      for (std::size_t k = start; k < i; ++k) content += lines[k] + (k + 1 < i ? "\n" : "");
      out.push_back({content});
    }
  }
  return out;
}

}  // namespace

std::string canonical_section_label(const std::string& heading) {
  const std::string norm = normalize_label(heading);
  auto it = synonyms().find(norm);
  return it == synonyms().end() ? norm : it->second;
}

std::string strip_code_fences(const std::string& text) {
  const auto blocks = fenced_blocks(text);
  if (blocks.empty()) return trim(text);
  const auto best = std::max_element(blocks.begin(), blocks.end(), [](const Fence& a, const Fence& b) {
    return a.content.size() < b.content.size();
  });
  return best->content;
}

ParsedResponse parse_sections(const std::string& raw, const std::vector<std::string>& expected) {
  ParsedResponse p;
  p.raw = raw;
  if (trim(raw).empty()) throw Error(ErrorKind::MissingSection, "empty reply");
  const auto lines = split_lines(raw);
  std::string label;
  std::string inline_body;
  std::size_t body_start = 0;
  bool in_fence = false;
  auto flush = [&](std::size_t end) {
    if (label.empty()) return;
    std::string text = trim_blank_lines(lines, body_start, end);
    if (!inline_body.empty()) text = text.empty() ? inline_body : inline_body + "\n" + text;
    if (label == section::Code) text = strip_code_fences(text);
    auto it = p.sections.find(label);
    if (it == p.sections.end()) {
      p.sections[label] = std::move(text);
      p.order.push_back(label);
    } else if (trim(it->second).empty()) {
      it->second = std::move(text);
    }
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_fence(lines[i])) {
      in_fence = !in_fence;
      continue;
    }
    if (in_fence) continue;
    if (auto h = heading_of(lines[i])) {
      flush(i);
      label = canonical_section_label(h->text);
      inline_body = h->inline_body;
      body_start = i + 1;
    }
  }
  flush(lines.size());

  const bool wants_code = std::find(expected.begin(), expected.end(), section::Code) != expected.end();
  if (wants_code && (!p.has(section::Code) || trim(p.sections[section::Code]).empty())) {
    if (!fenced_blocks(raw).empty()) {
      if (!p.has(section::Code)) p.order.push_back(section::Code);
      p.sections[section::Code] = strip_code_fences(raw);
    } else if (p.sections.empty() && raw.find(';') != std::string::npos &&
               raw.find('{') != std::string::npos) {
      // A bare program with no headings at all.
      p.sections[section::Code] = trim(raw);
      p.order.push_back(section::Code);
    }
  }

  const bool wants_output =
      std::find(expected.begin(), expected.end(), section::Output) != expected.end();
  if (wants_output && p.sections.empty()) {
    // A bare prediction with no headings is the output itself.
    p.sections[section::Output] = trim_blank_lines(lines, 0, lines.size());
    p.order.push_back(section::Output);
  }

  std::vector<std::string> missing;
  for (const auto& e : expected)
    if (!p.has(e)) missing.push_back(e);
  if (!missing.empty()) {
    std::string found;
    for (const auto& l : p.order) found += (found.empty() ? "" : ", ") + l;
    std::string want;
    for (const auto& m : missing) want += (want.empty() ? "" : ", ") + m;
    throw Error(ErrorKind::MissingSection,
                "missing " + want + " (found: " + (found.empty() ? "none" : found) + ")");
  }
  return p;
}

namespace {

struct Marker {
  bool is_output;
  std::string rest;  // text after the colon on the marker line
};

std::optional<Marker> marker_of(const std::string& line) {
  const std::size_t colon = line.find(':');
  if (colon == std::string::npos) return std::nullopt;
  const std::string norm = normalize_label(line.substr(0, colon));
  if (norm.empty() || !is_io_marker_head(norm)) return std::nullopt;
  std::string rest = line.substr(colon + 1);
  rest.erase(std::remove(rest.begin(), rest.end(), '*'), rest.end());
  // "Test case 1:" without input/output opens an input block.
  return Marker{norm.find("output") != std::string::npos, trim(rest)};
}

struct Block {
  bool is_output;
  std::string text;
};

std::string block_text(const std::vector<std::string>& lines, std::size_t b, std::size_t e,
                       const std::string& rest) {
  std::string joined;
  for (std::size_t i = b; i < e; ++i) joined += lines[i] + "\n";
  const auto fences = fenced_blocks(joined);
  if (!fences.empty()) return fences.front().content;
  if (!rest.empty()) {
    std::vector<std::string> with_rest{rest};
    with_rest.insert(with_rest.end(), lines.begin() + static_cast<long>(b), lines.begin() + static_cast<long>(e));
    return trim_blank_lines(with_rest, 0, with_rest.size());
  }
  return trim_blank_lines(lines, b, e);
}

std::vector<Block> marked_blocks(const std::string& text) {
  const auto lines = split_lines(text);
  std::vector<Block> blocks;
  std::optional<Marker> cur;
  std::size_t start = 0;
  bool in_fence = false;
  for (std::size_t i = 0; i <= lines.size(); ++i) {
    std::optional<Marker> m;
    if (i < lines.size()) {
      if (is_fence(lines[i])) in_fence = !in_fence;
      else if (!in_fence) m = marker_of(lines[i]);
    }
    if (i == lines.size() || m) {
      if (cur) blocks.push_back({cur->is_output, block_text(lines, start, i, cur->rest)});
      if (m) {
        cur = m;
        start = i + 1;
      }
    }
  }
  return blocks;
}

}  // namespace

std::vector<std::string> extract_test_inputs(const ParsedResponse& parsed) {
  auto it = parsed.sections.find(section::TestInputs);
  if (it == parsed.sections.end()) return {};
  const std::string& text = it->second;
  std::vector<std::string> out;
  auto blocks = marked_blocks(text);
  if (!blocks.empty()) {
    for (auto& b : blocks)
      if (!b.is_output && !trim(b.text).empty()) out.push_back(std::move(b.text));
    return out;
  }
  const auto fences = fenced_blocks(text);
  if (!fences.empty()) {
    for (const auto& f : fences)
      if (!trim(f.content).empty()) out.push_back(f.content);
    return out;
  }
  const auto lines = split_lines(text);
  std::size_t start = 0;
  for (std::size_t i = 0; i <= lines.size(); ++i) {
    if (i == lines.size() || trim(lines[i]).empty()) {
      std::string para = trim_blank_lines(lines, start, i);
      if (!para.empty()) out.push_back(std::move(para));
      start = i + 1;
    }
  }
  return out;
}

std::vector<InputOutputPair> extract_test_cases(const ParsedResponse& parsed) {
  auto it = parsed.sections.find(section::TestCases);
  if (it == parsed.sections.end()) return {};
  std::vector<InputOutputPair> out;
  std::optional<std::string> pending;
  for (auto& b : marked_blocks(it->second)) {
    if (!b.is_output) {
      pending = std::move(b.text);
    } else if (pending) {
      out.push_back({std::move(*pending), std::move(b.text)});
      pending.reset();
    }
  }
  return out;
}

}  // namespace optbench
