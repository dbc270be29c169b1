// Tool calls and their wire form: one JSON action object per line with
// fields action / token / fraction / strategy / reason / note. Every policy,
// internal or external, emits this line; the engine owns the single parse
// path, so malformed output is always counted as a parse error rather than a
// guard rejection.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vaultsim/amount.hpp"
#include "vaultsim/expected.hpp"
#include "vaultsim/pool.hpp"

namespace vaultsim {

enum class ReasonTag {
    FeeCost,
    Momentum,
    StopLoss,
    ProfitTarget,
    ThesisBroken,
    StrategyExecution,
    Cooldown,
    RestrictionCompliant,
    HoldRule,
    ReapHold,
    Cadence,        // probe-only
    FabricatedRule, // probe-only
    Timeout,        // adapter timeouts
};

inline constexpr ReasonTag ALL_REASON_TAGS[] = {
    ReasonTag::FeeCost,    ReasonTag::Momentum,      ReasonTag::StopLoss,
    ReasonTag::ProfitTarget, ReasonTag::ThesisBroken, ReasonTag::StrategyExecution,
    ReasonTag::Cooldown,   ReasonTag::RestrictionCompliant, ReasonTag::HoldRule,
    ReasonTag::ReapHold,   ReasonTag::Cadence,       ReasonTag::FabricatedRule,
    ReasonTag::Timeout,
};

inline const char* reason_tag_name(ReasonTag t) {
    switch (t) {
        case ReasonTag::FeeCost: return "fee_cost";
        case ReasonTag::Momentum: return "momentum";
        case ReasonTag::StopLoss: return "stop_loss";
        case ReasonTag::ProfitTarget: return "profit_target";
        case ReasonTag::ThesisBroken: return "thesis_broken";
        case ReasonTag::StrategyExecution: return "strategy_execution";
        case ReasonTag::Cooldown: return "cooldown";
        case ReasonTag::RestrictionCompliant: return "restriction_compliant";
        case ReasonTag::HoldRule: return "hold_rule";
        case ReasonTag::ReapHold: return "reap_hold";
        case ReasonTag::Cadence: return "cadence";
        case ReasonTag::FabricatedRule: return "fabricated_rule";
        case ReasonTag::Timeout: return "timeout";
    }
    return "?";
}

inline std::optional<ReasonTag> reason_tag_from_name(std::string_view n) {
    for (ReasonTag t : ALL_REASON_TAGS)
        if (n == reason_tag_name(t)) return t;
    return std::nullopt;
}

struct ToolCall {
    enum class Action { Buy, Sell, Observe };
    Action action = Action::Observe;
    TokenId token_id;              // buys and sells
    u64 fraction_ppm = 0;          // of available ETH (buy) / of position (sell)
    std::string strategy_label;    // optional linkage to an active strategy
    std::vector<ReasonTag> reason_tags; // first tag is dominant
    std::string note;

    bool is_swap() const { return action != Action::Observe; }
    ReasonTag dominant_tag() const {
        return reason_tags.empty() ? ReasonTag::Momentum : reason_tags.front();
    }

    bool operator==(const ToolCall&) const = default;
};

inline const char* action_name(ToolCall::Action a) {
    switch (a) {
        case ToolCall::Action::Buy: return "buy";
        case ToolCall::Action::Sell: return "sell";
        case ToolCall::Action::Observe: return "observe";
    }
    return "?";
}

struct ParseError {
    std::size_t position = 0; // byte offset into the raw response
    std::string cause;
};

namespace detail {

// Span of the first top-level JSON value starting at text[start] ('{').
// String- and escape-aware; returns one past the matching close brace.
inline std::optional<std::size_t> first_object_end(std::string_view text, std::size_t start) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::nullopt;
}

} // namespace detail

// Canonical wire line (no trailing newline).
inline std::string format_tool_call(const ToolCall& c) {
    std::string out = "{\"action\":";
    out += nlohmann::json(action_name(c.action)).dump();
    if (c.is_swap()) {
        out += ",\"token\":";
        out += nlohmann::json(c.token_id).dump();
        out += ",\"fraction\":";
        out += ppm_of(Eth(QUANTA), c.fraction_ppm).to_decimal_string();
    }
    if (!c.strategy_label.empty()) {
        out += ",\"strategy\":";
        out += nlohmann::json(c.strategy_label).dump();
    }
    if (!c.reason_tags.empty()) {
        out += ",\"reason\":[";
        for (std::size_t i = 0; i < c.reason_tags.size(); ++i) {
            if (i) out += ',';
            out += nlohmann::json(reason_tag_name(c.reason_tags[i])).dump();
        }
        out += ']';
    }
    if (!c.note.empty()) {
        out += ",\"note\":";
        out += nlohmann::json(c.note).dump();
    }
    out += '}';
    return out;
}

// Parses the external-adapter wire form: exactly one action object on one
// line. Parse failures are harness-reliability signals, counted separately
// from guard rejections and settlement failures.
inline Expected<ToolCall, ParseError> parse_tool_call(std::string_view raw) {
    std::string_view text = raw;
    if (!text.empty() && text.back() == '\n') text.remove_suffix(1);
    if (!text.empty() && text.back() == '\r') text.remove_suffix(1);

    std::size_t begin = text.find_first_not_of(" \t");
    if (begin == std::string_view::npos) return ParseError{0, "empty response"};
    if (text.find('\n') != std::string_view::npos)
        return ParseError{text.find('\n'), "multiple lines"};
    if (text[begin] != '{') return ParseError{begin, "expected a JSON action object"};

    auto end = detail::first_object_end(text, begin);
    if (!end) return ParseError{text.size(), "unterminated action object"};
    std::size_t rest = text.find_first_not_of(" \t", *end);
    if (rest != std::string_view::npos)
        return ParseError{rest, "multiple actions: exactly one tool call per invocation"};

    nlohmann::json j = nlohmann::json::parse(text.substr(begin, *end - begin), nullptr, false);
    if (j.is_discarded()) return ParseError{begin, "malformed JSON action object"};
    if (!j.is_object()) return ParseError{begin, "action must be a JSON object"};

    ToolCall c;
    if (!j.contains("action") || !j["action"].is_string())
        return ParseError{begin, "missing field: action"};
    std::string a = j["action"].get<std::string>();
    if (a == "buy") c.action = ToolCall::Action::Buy;
    else if (a == "sell") c.action = ToolCall::Action::Sell;
    else if (a == "observe") c.action = ToolCall::Action::Observe;
    else return ParseError{begin, "unknown action: " + a};

    if (c.is_swap()) {
        if (!j.contains("token") || !j["token"].is_string() ||
            j["token"].get<std::string>().empty())
            return ParseError{begin, "missing field: token"};
        c.token_id = j["token"].get<std::string>();
        if (!j.contains("fraction") || !j["fraction"].is_number())
            return ParseError{begin, "missing field: fraction"};
        double f = j["fraction"].get<double>();
        if (!(f > 0.0) || f > 1.0)
            return ParseError{begin, "fraction must be in (0, 1]"};
        c.fraction_ppm = u64(f * 1'000'000.0 + 0.5);
        if (c.fraction_ppm == 0 || c.fraction_ppm > 1'000'000)
            return ParseError{begin, "fraction must be in (0, 1]"};
    }
    if (j.contains("strategy")) {
        if (!j["strategy"].is_string()) return ParseError{begin, "strategy must be a string"};
        c.strategy_label = j["strategy"].get<std::string>();
    }
    if (j.contains("reason")) {
        if (!j["reason"].is_array()) return ParseError{begin, "reason must be an array"};
        for (const auto& r : j["reason"]) {
            if (!r.is_string()) return ParseError{begin, "reason tags must be strings"};
            auto tag = reason_tag_from_name(r.get<std::string>());
            if (!tag) return ParseError{begin, "unknown reason tag: " + r.get<std::string>()};
            c.reason_tags.push_back(*tag);
        }
    }
    if (j.contains("note")) {
        if (!j["note"].is_string()) return ParseError{begin, "note must be a string"};
        c.note = j["note"].get<std::string>();
    }
    return c;
}

} // namespace vaultsim
