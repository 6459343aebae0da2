#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace optbench {

enum class TemplateName {
  Instruct,
  ChainOfThought,
  Inference,
  AnchorStage1,
  AnchorStage3Refine,
  SelfDebugging,
  DirectTestGeneration,
  ComparisonGroupOutputs,
  OptTypeClassify,
};

std::string to_string(TemplateName n);
TemplateName parse_template_name(const std::string& s);  // Error{UnknownTemplate}
const std::vector<TemplateName>& all_templates();

// Canonical section labels produced by parse_sections.
namespace section {
inline const std::string Explanation = "Explanation";
inline const std::string TestInputs = "TestInputs";
inline const std::string TestCases = "TestCases";
inline const std::string Code = "Code";
inline const std::string Strategy = "Strategy";
inline const std::string Output = "Output";
inline const std::string Label = "Label";
}  // namespace section

using Bindings = std::map<std::string, std::string>;

struct PromptTemplate {
  TemplateName name;
  std::string body;
  // Sections a reply to this prompt is expected to contain.
  std::vector<std::string> expected_sections;
};

// Placeholders are `{identifier}`; braces around anything else (such as
// `{Your explanation here}`) are literal text.
std::vector<std::string> placeholders(const std::string& body);

// Substitutes every placeholder in a single pass over the template, so bound
// values are never rescanned. Throws Error{UnboundPlaceholder}.
std::string render(const PromptTemplate& t, const Bindings& bindings);

// sha256 of the canonical JSON encoding of the bindings.
std::string bindings_sha256(const Bindings& bindings);

class TemplateRegistry {
 public:
  TemplateRegistry();  // built-in defaults

  const PromptTemplate& get(TemplateName name) const;
  void override_body(TemplateName name, std::string body);
  // Reads `<dir>/<TemplateName>.txt` for every template present there.
  // Returns the names that were overridden.
  std::vector<TemplateName> load_overrides(const std::filesystem::path& dir);

 private:
  std::map<TemplateName, PromptTemplate> templates_;
};

struct ParsedResponse {
  std::map<std::string, std::string> sections;
  std::vector<std::string> order;  // labels in reply order
  std::string raw;

  bool has(const std::string& label) const { return sections.count(label) > 0; }
  const std::string& get(const std::string& label) const;  // Error{MissingSection}
};

// Maps a heading text to its canonical label (unknown headings are returned
// lower-cased with punctuation removed).
std::string canonical_section_label(const std::string& heading);

// Splits a reply on markdown headings (`### Label:`), bold labels
// (`**Label:**`) and bare known labels (`Explanation:`), ignoring anything
// inside code fences. A missing Code section falls back to the largest fenced
// block. Throws Error{MissingSection} for an empty reply or when an expected
// label is absent (the message lists the labels that were found).
ParsedResponse parse_sections(const std::string& raw, const std::vector<std::string>& expected);

// Content of the largest fenced block, or the trimmed text when unfenced.
std::string strip_code_fences(const std::string& text);

// Test inputs from the TestInputs section: fenced blocks, else
// "Test case N input:" sub-blocks, else blank-line separated paragraphs.
std::vector<std::string> extract_test_inputs(const ParsedResponse& parsed);

struct InputOutputPair {
  std::string input;
  std::string output;
};

// Input/output pairs from the TestCases section ("Test case N input:" /
// "Test case N output:" or "Input:" / "Output:" markers).
std::vector<InputOutputPair> extract_test_cases(const ParsedResponse& parsed);

}  // namespace optbench
