// Strategy-text classifier: a small deterministic keyword/pattern grammar
// that routes HIGH directives as immediate actions, triggered actions,
// restrictions or hold rules. Anything outside the grammar is Unclassified
// and handled conservatively (monitor and observe). The same grammar backs
// the mandate linter.
#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vaultsim/amount.hpp"

namespace vaultsim {

struct TriggerCondition {
    enum class Kind { PnlGain, PnlDrop, PriceRise, PriceDrop, PriceAbove, PriceBelow };
    Kind kind = Kind::PnlGain;
    std::string token; // empty means "the position being monitored"
    i64 threshold_bps = 0;
    u128 price_e18 = 0; // absolute comparators only

    bool operator==(const TriggerCondition&) const = default;
};

struct DirectiveClass {
    enum class Kind { Immediate, Triggered, Restriction, HoldRule, Unclassified };
    enum class Verb { None, Buy, Sell, Liquidate };
    enum class Scope { None, GenesisTokens, NamedToken, AllTrading };

    Kind kind = Kind::Unclassified;
    Verb verb = Verb::None;
    std::string token;
    std::optional<u64> fraction_ppm; // "sell 50%" -> 500000
    std::optional<TriggerCondition> condition;
    Scope restriction_scope = Scope::None;
    bool restriction_buy_only = false;
    std::vector<std::string> hold_tokens; // empty + HoldRule means all holdings

    bool operator==(const DirectiveClass&) const = default;
};

enum class StrategyStatus { Pending, Triggered, Completed, Blocked, ActiveCompliant, Violated };

inline const char* strategy_status_name(StrategyStatus s) {
    switch (s) {
        case StrategyStatus::Pending: return "pending";
        case StrategyStatus::Triggered: return "triggered";
        case StrategyStatus::Completed: return "completed";
        case StrategyStatus::Blocked: return "blocked";
        case StrategyStatus::ActiveCompliant: return "active_compliant";
        case StrategyStatus::Violated: return "violated";
    }
    return "?";
}

namespace detail {

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    return out;
}

inline bool contains(std::string_view hay, std::string_view needle) {
    return hay.find(needle) != std::string_view::npos;
}

// Uppercase words of 2..12 chars are treated as token symbols; a small
// stopword list filters trading vocabulary that is conventionally shouted.
inline std::vector<std::string> extract_symbols(std::string_view text) {
    static const std::vector<std::string> stop = {
        "ETH",  "WETH", "PNL",  "BUY",  "SELL", "HOLD", "NOW", "HIGH", "MEDIUM",
        "LOW",  "OBSERVE", "USD", "TA",  "ARP",  "TS",   "HS",  "DIV",  "OK",
        "NOT",  "ONLY", "AND",  "OR",   "IF",   "ALL",  "NEVER", "AVOID"};
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (std::isupper(static_cast<unsigned char>(text[i])) ||
            std::isdigit(static_cast<unsigned char>(text[i]))) {
            std::size_t j = i;
            bool has_alpha = false;
            while (j < text.size() && (std::isupper(static_cast<unsigned char>(text[j])) ||
                                       std::isdigit(static_cast<unsigned char>(text[j])))) {
                has_alpha |= std::isupper(static_cast<unsigned char>(text[j]));
                ++j;
            }
            std::size_t len = j - i;
            if (has_alpha && len >= 2 && len <= 12) {
                std::string w(text.substr(i, len));
                if (std::find(stop.begin(), stop.end(), w) == stop.end() &&
                    std::find(out.begin(), out.end(), w) == out.end())
                    out.push_back(std::move(w));
            }
            i = j;
        } else {
            ++i;
        }
    }
    return out;
}

// First "N%" or "N %" in the text, as basis points. Two fractional digits are
// honored; deeper precision is truncated.
inline std::optional<i64> extract_percent_bps(std::string_view text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) continue;
        std::size_t j = i;
        i64 whole = 0;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
            whole = whole * 10 + (text[j] - '0');
            ++j;
        }
        i64 frac = 0, scale = 1;
        if (j < text.size() && text[j] == '.') {
            ++j;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
                if (scale < 100) {
                    frac = frac * 10 + (text[j] - '0');
                    scale *= 10;
                }
                ++j;
            }
        }
        std::size_t k = j;
        while (k < text.size() && text[k] == ' ') ++k;
        if (k < text.size() && text[k] == '%') return whole * 100 + frac * (100 / scale);
        i = j;
    }
    return std::nullopt;
}

// First bare decimal number (no trailing %), as an e18-scaled price.
inline std::optional<u128> extract_price_e18(std::string_view text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) continue;
        std::size_t j = i;
        while (j < text.size() && (std::isdigit(static_cast<unsigned char>(text[j])) ||
                                   text[j] == '.'))
            ++j;
        std::size_t k = j;
        while (k < text.size() && text[k] == ' ') ++k;
        if (k < text.size() && text[k] == '%') {
            i = j;
            continue;
        }
        std::string tok(text.substr(i, j - i));
        while (!tok.empty() && tok.back() == '.') tok.pop_back();
        try {
            return Eth::parse(tok).raw;
        } catch (const std::exception&) {
            i = j;
        }
    }
    return std::nullopt;
}

} // namespace detail

inline DirectiveClass classify_directive(std::string_view text) {
    DirectiveClass d;
    if (text.empty()) return d;
    std::string low = detail::lower(text);
    auto symbols = detail::extract_symbols(text);
    std::string first_symbol = symbols.empty() ? std::string{} : symbols.front();

    auto has = [&](std::string_view n) { return detail::contains(low, n); };

    // Conditional forms first: "if"/"when" plus a parsable comparator.
    bool conditional = low.rfind("if ", 0) == 0 || low.rfind("when ", 0) == 0 ||
                       has(" if ") || has(" when ");
    if (conditional) {
        TriggerCondition cond;
        bool parsed = false;
        auto pct = detail::extract_percent_bps(low);
        if (has("pnl") && pct) {
            bool drop = has("drop") || has("fall") || has("-");
            cond.kind = drop ? TriggerCondition::Kind::PnlDrop : TriggerCondition::Kind::PnlGain;
            cond.threshold_bps = *pct;
            parsed = true;
        } else if (has("price") && pct) {
            bool drop = has("drop") || has("fall") || has("dip");
            cond.kind = drop ? TriggerCondition::Kind::PriceDrop
                             : TriggerCondition::Kind::PriceRise;
            cond.threshold_bps = *pct;
            parsed = true;
        } else if (has("price") || has("reaches") || has("hits")) {
            if (auto p = detail::extract_price_e18(low)) {
                bool below = has("below") || has("under") || has("drop");
                cond.kind = below ? TriggerCondition::Kind::PriceBelow
                                  : TriggerCondition::Kind::PriceAbove;
                cond.price_e18 = *p;
                parsed = true;
            }
        }
        if (!parsed) return d; // Unclassified: monitor and observe
        cond.token = first_symbol;
        d.kind = DirectiveClass::Kind::Triggered;
        d.condition = cond;
        d.token = first_symbol;
        if (has("liquidate")) d.verb = DirectiveClass::Verb::Liquidate;
        else if (has("buy")) d.verb = DirectiveClass::Verb::Buy;
        else d.verb = DirectiveClass::Verb::Sell;
        return d;
    }

    // Hold rules before sell parsing so "never sell X" is not an action.
    if (has("never sell") || has("hold ") || low == "hold" || has("do not sell") ||
        has("don't sell")) {
        d.kind = DirectiveClass::Kind::HoldRule;
        d.hold_tokens = symbols;
        return d;
    }

    if (has("avoid") || has("only buy") || has("only trade") || has("stay flat") ||
        has("do not ") || has("don't ")) {
        d.kind = DirectiveClass::Kind::Restriction;
        if (has("stay flat")) {
            d.restriction_scope = DirectiveClass::Scope::AllTrading;
        } else if (has("genesis")) {
            // "Avoid genesis tokens" means all genesis tokens; no scope narrowing.
            d.restriction_scope = DirectiveClass::Scope::GenesisTokens;
        } else if (!first_symbol.empty()) {
            d.restriction_scope = DirectiveClass::Scope::NamedToken;
            d.token = first_symbol;
        } else {
            d.restriction_scope = DirectiveClass::Scope::AllTrading;
        }
        d.restriction_buy_only = has("only buy");
        return d;
    }

    if (has("liquidate")) {
        d.kind = DirectiveClass::Kind::Immediate;
        d.verb = DirectiveClass::Verb::Liquidate;
        d.token = first_symbol;
        return d;
    }
    bool buys = has("buy");
    bool sells = has("sell");
    if (buys || sells) {
        d.kind = DirectiveClass::Kind::Immediate;
        d.verb = sells ? DirectiveClass::Verb::Sell : DirectiveClass::Verb::Buy;
        d.token = first_symbol;
        if (auto pct = detail::extract_percent_bps(low)) {
            i64 ppm = *pct * 100;
            if (ppm > 0 && ppm <= 1'000'000) d.fraction_ppm = u64(ppm);
        }
        return d;
    }
    return d; // Unclassified
}

} // namespace vaultsim
