#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>

namespace medhop::prompt {

// A template file is plain text with optional <system>...</system> and
// <user>...</user> sections; a file without markers is all user text.
// Placeholders are {identifier}; {{ and }} escape literal braces.
struct PromptTemplate {
    std::string name;
    std::string system_text;
    std::string user_text;
    std::set<std::string> required_placeholders;
};

struct RenderedPrompt {
    std::string system_text;
    std::string user_text;

    std::size_t size() const { return system_text.size() + user_text.size(); }
};

// Scans for {identifier} occurrences, honoring {{ }} escapes. A lone brace
// that does not open a well-formed placeholder is literal text.
std::set<std::string> scan_placeholders(const std::string& text);

PromptTemplate parse_template(const std::string& name, const std::string& file_text);

// Throws Error{IoFailure} when the file cannot be read.
PromptTemplate load_template(const std::filesystem::path& path, const std::string& name);

// Single-pass substitution: bound values are inserted verbatim and never
// re-scanned, so braces inside data cannot inject placeholders. Throws
// Error{MissingPlaceholder} naming the first unbound placeholder.
RenderedPrompt render(const PromptTemplate& tpl,
                      const std::map<std::string, std::string>& bindings);

// The fixed set of templates the pipeline uses, loaded from one directory:
//   simplify.txt, decompose.txt, extract_direct.txt, answer.txt
// plus decompose_examples.txt, a plain-text block of worked examples that is
// bound into the decompose template's {examples} slot (editable without
// recompiling).
class PromptLibrary {
public:
    explicit PromptLibrary(const std::filesystem::path& template_dir);

    const PromptTemplate& simplify() const { return simplify_; }
    const PromptTemplate& decompose() const { return decompose_; }
    const PromptTemplate& extract_direct() const { return extract_direct_; }
    const PromptTemplate& answer() const { return answer_; }
    const std::string& decompose_examples() const { return examples_; }

private:
    PromptTemplate simplify_;
    PromptTemplate decompose_;
    PromptTemplate extract_direct_;
    PromptTemplate answer_;
    std::string examples_;
};

}  // namespace medhop::prompt
