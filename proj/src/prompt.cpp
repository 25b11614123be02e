#include "medhop/prompt.hpp"

#include "medhop/errors.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace medhop::prompt {

namespace {

bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Returns the identifier if text[pos] opens a well-formed {identifier}, and
// advances `end` past the closing brace; returns empty otherwise.
std::string match_placeholder(const std::string& text, std::size_t pos, std::size_t& end) {
    if (pos + 1 >= text.size() || text[pos] != '{' || !ident_start(text[pos + 1])) return {};
    std::size_t i = pos + 1;
    while (i < text.size() && ident_char(text[i])) ++i;
    if (i >= text.size() || text[i] != '}') return {};
    end = i + 1;
    return text.substr(pos + 1, i - pos - 1);
}

void scan_into(const std::string& text, std::set<std::string>& out) {
    for (std::size_t i = 0; i < text.size();) {
        if (text[i] == '{' && i + 1 < text.size() && text[i + 1] == '{') {
            i += 2;
            continue;
        }
        if (text[i] == '}' && i + 1 < text.size() && text[i + 1] == '}') {
            i += 2;
            continue;
        }
        std::size_t end = 0;
        std::string name = match_placeholder(text, i, end);
        if (!name.empty()) {
            out.insert(name);
            i = end;
        } else {
            ++i;
        }
    }
}

std::string render_section(const std::string& text,
                           const std::map<std::string, std::string>& bindings) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        if (text[i] == '{' && i + 1 < text.size() && text[i + 1] == '{') {
            out.push_back('{');
            i += 2;
            continue;
        }
        if (text[i] == '}' && i + 1 < text.size() && text[i + 1] == '}') {
            out.push_back('}');
            i += 2;
            continue;
        }
        std::size_t end = 0;
        std::string name = match_placeholder(text, i, end);
        if (!name.empty()) {
            auto it = bindings.find(name);
            if (it == bindings.end()) {
                throw Error(ErrorKind::MissingPlaceholder,
                            "prompt placeholder {" + name + "} is unbound");
            }
            out += it->second;
            i = end;
        } else {
            out.push_back(text[i]);
            ++i;
        }
    }
    return out;
}

// Extracts the text between <tag> and </tag>; empty when the tag is absent.
std::string extract_section(const std::string& text, const std::string& tag, bool& found) {
    const std::string open = "<" + tag + ">";
    const std::string close = "</" + tag + ">";
    auto start = text.find(open);
    found = start != std::string::npos;
    if (!found) return {};
    start += open.size();
    if (start < text.size() && text[start] == '\n') ++start;  // marker sits on its own line
    auto end = text.find(close, start);
    if (end == std::string::npos) end = text.size();
    std::string section = text.substr(start, end - start);
    while (!section.empty() && (section.back() == '\n' || section.back() == '\r')) {
        section.pop_back();
    }
    return section;
}

}  // namespace

std::set<std::string> scan_placeholders(const std::string& text) {
    std::set<std::string> out;
    scan_into(text, out);
    return out;
}

PromptTemplate parse_template(const std::string& name, const std::string& file_text) {
    PromptTemplate tpl;
    tpl.name = name;
    bool has_system = false, has_user = false;
    std::string system_text = extract_section(file_text, "system", has_system);
    std::string user_text = extract_section(file_text, "user", has_user);
    if (!has_system && !has_user) {
        user_text = file_text;  // a bare file is all user text
    }
    tpl.system_text = std::move(system_text);
    tpl.user_text = std::move(user_text);
    scan_into(tpl.system_text, tpl.required_placeholders);
    scan_into(tpl.user_text, tpl.required_placeholders);
    return tpl;
}

PromptTemplate load_template(const std::filesystem::path& path, const std::string& name) {
    std::ifstream in(path);
    if (!in.is_open()) {
        throw Error(ErrorKind::IoFailure, "cannot read prompt template " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_template(name, buf.str());
}

RenderedPrompt render(const PromptTemplate& tpl,
                      const std::map<std::string, std::string>& bindings) {
    RenderedPrompt out;
    out.system_text = render_section(tpl.system_text, bindings);
    out.user_text = render_section(tpl.user_text, bindings);
    return out;
}

PromptLibrary::PromptLibrary(const std::filesystem::path& template_dir) {
    simplify_ = load_template(template_dir / "simplify.txt", "simplify");
    decompose_ = load_template(template_dir / "decompose.txt", "decompose");
    extract_direct_ = load_template(template_dir / "extract_direct.txt", "extract_direct");
    answer_ = load_template(template_dir / "answer.txt", "answer");

    std::ifstream in(template_dir / "decompose_examples.txt");
    if (!in.is_open()) {
        throw Error(ErrorKind::IoFailure, "cannot read decompose examples in " +
                                              template_dir.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    examples_ = buf.str();
    while (!examples_.empty() && (examples_.back() == '\n' || examples_.back() == '\r')) {
        examples_.pop_back();
    }
}

}  // namespace medhop::prompt
