// Text format for brief templates: a versioned header, an ordered section
// list, per-section static prose blocks, and [when <predicate>] conditional
// insertions written in the slider mini-language. Prompt revisions are edits
// to these files, never code changes.
#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "vaultsim/brief.hpp"
#include "vaultsim/expected.hpp"

namespace vaultsim {

inline constexpr const char* TEMPLATE_FORMAT_ID = "vaultsim-template-v1";

struct TemplateParseError {
    std::size_t line = 0;
    std::string message;
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return std::string(s.substr(a, b - a));
}

} // namespace detail

inline Expected<BriefTemplate, TemplateParseError> parse_template(std::string_view text) {
    BriefTemplate tmpl;
    bool saw_format = false, saw_variant = false, saw_order = false;
    std::optional<SectionId> current_section;
    bool in_when = false;
    SliderPredicate when_pred;
    std::string when_text;
    std::string section_text;

    auto lines = split_lines(text);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const std::string& raw = lines[ln];
        std::string line = detail::trim(raw);
        std::size_t lineno = ln + 1;

        if (!current_section) {
            if (line.empty() || line[0] == '#') continue;
            if (line.rfind("template:", 0) == 0) {
                if (detail::trim(line.substr(9)) != TEMPLATE_FORMAT_ID)
                    return TemplateParseError{lineno, "unsupported template format"};
                saw_format = true;
                continue;
            }
            if (line.rfind("variant:", 0) == 0) {
                tmpl.variant_id = detail::trim(line.substr(8));
                if (tmpl.variant_id.empty())
                    return TemplateParseError{lineno, "empty variant id"};
                saw_variant = true;
                continue;
            }
            if (line.rfind("order:", 0) == 0) {
                std::stringstream ss(line.substr(6));
                std::string item;
                while (std::getline(ss, item, ',')) {
                    std::string name = detail::trim(item);
                    if (name.empty()) continue;
                    auto id = section_from_name(name);
                    if (!id) return TemplateParseError{lineno, "unknown section: " + name};
                    for (SectionId s : tmpl.section_order)
                        if (s == *id)
                            return TemplateParseError{lineno, "duplicate section: " + name};
                    tmpl.section_order.push_back(*id);
                }
                if (tmpl.section_order.empty())
                    return TemplateParseError{lineno, "empty section order"};
                saw_order = true;
                continue;
            }
        }

        if (line.rfind("[section ", 0) == 0 && line.back() == ']') {
            if (current_section)
                return TemplateParseError{lineno, "nested [section] block"};
            auto id = section_from_name(detail::trim(line.substr(9, line.size() - 10)));
            if (!id) return TemplateParseError{lineno, "unknown section in block header"};
            current_section = id;
            section_text.clear();
            continue;
        }
        if (line == "[endsection]") {
            if (!current_section) return TemplateParseError{lineno, "[endsection] outside block"};
            if (in_when) return TemplateParseError{lineno, "unterminated [when] block"};
            while (!section_text.empty() && section_text.back() == '\n') section_text.pop_back();
            tmpl.static_texts[*current_section] = section_text;
            current_section.reset();
            continue;
        }
        if (line.rfind("[when ", 0) == 0 && line.back() == ']') {
            if (!current_section) return TemplateParseError{lineno, "[when] outside section"};
            if (in_when) return TemplateParseError{lineno, "nested [when] block"};
            auto pred = SliderPredicate::parse(detail::trim(line.substr(6, line.size() - 7)));
            if (!pred.ok()) return TemplateParseError{lineno, "bad predicate: " + pred.error()};
            when_pred = *pred;
            when_text.clear();
            in_when = true;
            continue;
        }
        if (line == "[endwhen]") {
            if (!in_when) return TemplateParseError{lineno, "[endwhen] without [when]"};
            while (!when_text.empty() && when_text.back() == '\n') when_text.pop_back();
            tmpl.conditional_rules.push_back({*current_section, when_pred, when_text});
            in_when = false;
            continue;
        }

        if (current_section) {
            std::string& dst = in_when ? when_text : section_text;
            dst += raw;
            dst += '\n';
        } else if (!line.empty()) {
            return TemplateParseError{lineno, "content outside any section"};
        }
    }

    if (current_section) return TemplateParseError{lines.size(), "unterminated [section] block"};
    if (!saw_format) return TemplateParseError{0, "missing template: header"};
    if (!saw_variant) return TemplateParseError{0, "missing variant: header"};
    if (!saw_order) return TemplateParseError{0, "missing order: list"};
    return tmpl;
}

inline std::string serialize_template(const BriefTemplate& tmpl) {
    std::string out;
    out += "template: ";
    out += TEMPLATE_FORMAT_ID;
    out += "\nvariant: ";
    out += tmpl.variant_id;
    out += "\norder: ";
    for (std::size_t i = 0; i < tmpl.section_order.size(); ++i) {
        if (i) out += ", ";
        out += section_name(tmpl.section_order[i]);
    }
    out += "\n";
    for (SectionId s : tmpl.section_order) {
        out += "\n[section ";
        out += section_name(s);
        out += "]\n";
        auto it = tmpl.static_texts.find(s);
        if (it != tmpl.static_texts.end() && !it->second.empty()) {
            out += it->second;
            out += '\n';
        }
        for (const auto& rule : tmpl.conditional_rules) {
            if (rule.section != s) continue;
            out += "[when ";
            out += rule.predicate.to_string();
            out += "]\n";
            out += rule.text;
            out += "\n[endwhen]\n";
        }
        out += "[endsection]\n";
    }
    return out;
}

inline Expected<BriefTemplate, TemplateParseError> load_template_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return TemplateParseError{0, "cannot open template file: " + path};
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_template(ss.str());
}

} // namespace vaultsim
