// Brief compiler: folds mandate + market + portfolio + constraints + reap +
// memory + clock into an ordered, hashed text brief plus a typed
// StructuredBrief. Section order and static prose are template data, so
// reading-order and number-hardening experiments are config-only; structural
// equality of briefs is order-independent by construction.
#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vaultsim/amount.hpp"
#include "vaultsim/directive.hpp"
#include "vaultsim/expected.hpp"
#include "vaultsim/mandate.hpp"
#include "vaultsim/market.hpp"
#include "vaultsim/sha256.hpp"
#include "vaultsim/vault.hpp"

namespace vaultsim {

enum class SectionId {
    SystemRules,
    OperatingRules,
    DirectiveRouter,
    MarketSnapshot,
    ActiveStrategies,
    ActiveSettings,
    PortfolioContext,
    ExecutionConstraints,
    ReapContext,
    UpcomingLaunch,
    PreviousDecisions,
    CurrentState,
};

inline constexpr std::array<SectionId, 12> ALL_SECTIONS = {
    SectionId::SystemRules,      SectionId::OperatingRules,  SectionId::DirectiveRouter,
    SectionId::MarketSnapshot,   SectionId::ActiveStrategies, SectionId::ActiveSettings,
    SectionId::PortfolioContext, SectionId::ExecutionConstraints, SectionId::ReapContext,
    SectionId::UpcomingLaunch,   SectionId::PreviousDecisions, SectionId::CurrentState,
};

inline const char* section_name(SectionId s) {
    switch (s) {
        case SectionId::SystemRules: return "SystemRules";
        case SectionId::OperatingRules: return "OperatingRules";
        case SectionId::DirectiveRouter: return "DirectiveRouter";
        case SectionId::MarketSnapshot: return "MarketSnapshot";
        case SectionId::ActiveStrategies: return "ActiveStrategies";
        case SectionId::ActiveSettings: return "ActiveSettings";
        case SectionId::PortfolioContext: return "PortfolioContext";
        case SectionId::ExecutionConstraints: return "ExecutionConstraints";
        case SectionId::ReapContext: return "ReapContext";
        case SectionId::UpcomingLaunch: return "UpcomingLaunch";
        case SectionId::PreviousDecisions: return "PreviousDecisions";
        case SectionId::CurrentState: return "CurrentState";
    }
    return "?";
}

inline std::optional<SectionId> section_from_name(std::string_view n) {
    for (SectionId s : ALL_SECTIONS)
        if (n == section_name(s)) return s;
    return std::nullopt;
}

inline const char* section_title(SectionId s) {
    switch (s) {
        case SectionId::SystemRules: return "SYSTEM RULES";
        case SectionId::OperatingRules: return "OPERATING RULES";
        case SectionId::DirectiveRouter: return "DIRECTIVE ROUTER";
        case SectionId::MarketSnapshot: return "MARKET SNAPSHOT";
        case SectionId::ActiveStrategies: return "ACTIVE STRATEGIES (CURRENT ONLY)";
        case SectionId::ActiveSettings: return "ACTIVE SETTINGS";
        case SectionId::PortfolioContext: return "PORTFOLIO CONTEXT";
        case SectionId::ExecutionConstraints: return "EXECUTION CONSTRAINTS";
        case SectionId::ReapContext: return "REAPS";
        case SectionId::UpcomingLaunch: return "UPCOMING TOKEN LAUNCH";
        case SectionId::PreviousDecisions: return "PREVIOUS DECISIONS";
        case SectionId::CurrentState: return "CURRENT STATE";
    }
    return "?";
}

// --- slider predicate mini-language: "TA>=4", "TA>=4 && HS>=4" -------------

enum class SliderName { TA, ARP, TS, HS, DIV };

inline const char* slider_short_name(SliderName s) {
    switch (s) {
        case SliderName::TA: return "TA";
        case SliderName::ARP: return "ARP";
        case SliderName::TS: return "TS";
        case SliderName::HS: return "HS";
        case SliderName::DIV: return "DIV";
    }
    return "?";
}

inline int slider_value(const SliderConfig& c, SliderName s) {
    switch (s) {
        case SliderName::TA: return c.trading_activity;
        case SliderName::ARP: return c.asset_risk_preference;
        case SliderName::TS: return c.trade_size;
        case SliderName::HS: return c.holding_style;
        case SliderName::DIV: return c.diversification;
    }
    return 0;
}

struct SliderPredicate {
    struct Atom {
        SliderName slider = SliderName::TA;
        bool ge = true; // ">=" when true, "<=" when false
        int value = 1;
        bool operator==(const Atom&) const = default;
    };
    std::vector<Atom> atoms; // conjunction

    bool eval(const SliderConfig& c) const {
        for (const auto& a : atoms) {
            int v = slider_value(c, a.slider);
            if (a.ge ? v < a.value : v > a.value) return false;
        }
        return true;
    }

    std::string to_string() const {
        std::string out;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            if (i) out += " && ";
            out += slider_short_name(atoms[i].slider);
            out += atoms[i].ge ? ">=" : "<=";
            out += std::to_string(atoms[i].value);
        }
        return out;
    }

    static Expected<SliderPredicate, std::string> parse(std::string_view text) {
        SliderPredicate p;
        std::size_t pos = 0;
        auto skip_ws = [&] { while (pos < text.size() && text[pos] == ' ') ++pos; };
        while (true) {
            skip_ws();
            Atom a;
            bool matched = false;
            for (SliderName s : {SliderName::ARP, SliderName::DIV, SliderName::TA,
                                 SliderName::TS, SliderName::HS}) {
                std::string_view n = slider_short_name(s);
                if (text.substr(pos, n.size()) == n) {
                    a.slider = s;
                    pos += n.size();
                    matched = true;
                    break;
                }
            }
            if (!matched) return std::string("expected slider name at offset ") +
                                 std::to_string(pos);
            skip_ws();
            if (text.substr(pos, 2) == ">=") a.ge = true;
            else if (text.substr(pos, 2) == "<=") a.ge = false;
            else return std::string("expected >= or <= at offset ") + std::to_string(pos);
            pos += 2;
            skip_ws();
            if (pos >= text.size() || text[pos] < '1' || text[pos] > '5')
                return std::string("expected level 1-5 at offset ") + std::to_string(pos);
            a.value = text[pos] - '0';
            ++pos;
            p.atoms.push_back(a);
            skip_ws();
            if (pos == text.size()) break;
            if (text.substr(pos, 2) != "&&")
                return std::string("expected && at offset ") + std::to_string(pos);
            pos += 2;
        }
        return p;
    }
};

struct ConditionalRule {
    SectionId section = SectionId::ActiveSettings;
    SliderPredicate predicate;
    std::string text;
};

struct BriefTemplate {
    std::string variant_id;
    std::vector<SectionId> section_order; // enabled sections, in render order
    std::map<SectionId, std::string> static_texts;
    std::vector<ConditionalRule> conditional_rules;

    bool enabled(SectionId s) const {
        for (SectionId t : section_order)
            if (t == s) return true;
        return false;
    }
};

enum class TemplateOpError { InvalidPermutation };

// Same static texts and conditionals, new order and variant id.
inline Expected<BriefTemplate, TemplateOpError> permute_sections(
    const BriefTemplate& tmpl, const std::vector<SectionId>& new_order) {
    if (new_order.size() != tmpl.section_order.size()) return TemplateOpError::InvalidPermutation;
    for (std::size_t i = 0; i < new_order.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j)
            if (new_order[i] == new_order[j]) return TemplateOpError::InvalidPermutation;
        if (!tmpl.enabled(new_order[i])) return TemplateOpError::InvalidPermutation;
    }
    BriefTemplate out = tmpl;
    out.section_order = new_order;
    std::string joined;
    for (SectionId s : new_order) {
        joined += section_name(s);
        joined += ',';
    }
    out.variant_id = tmpl.variant_id + "@" + sha256_hex(joined).substr(0, 8);
    return out;
}

// --- structured payloads ----------------------------------------------------

struct StrategyView {
    std::string label;
    std::string text;
    Priority priority = Priority::Medium;
    std::optional<Tick> expiry;
    DirectiveClass directive;
    StrategyStatus status = StrategyStatus::Pending;

    bool operator==(const StrategyView&) const = default;
};

struct ReapContextInfo {
    bool scheduled = false;
    Tick next_at = 0;
    std::vector<std::string> source_candidates; // ascending market cap
    std::vector<std::string> target_candidates; // descending market cap

    bool operator==(const ReapContextInfo&) const = default;
};

struct LaunchContextInfo {
    bool upcoming = false;
    Tick at = 0;
    std::string symbol;

    bool operator==(const LaunchContextInfo&) const = default;
};

struct TokenCapsInfo {
    TokenId token_id;
    std::string symbol;
    Eth buy_cap_impact;             // largest buy within the impact bound
    bool sell_uncapped = true;      // any size passes the impact bound
    TokenUnits sell_cap_impact;     // meaningful when !sell_uncapped and position held
    bool has_position = false;
    bool newcoin_capped = false;
    Eth newcoin_cap;

    bool operator==(const TokenCapsInfo&) const = default;
};

struct ConstraintContextInfo {
    u64 max_trade_bps = 10'000;
    u64 slippage_bps = 100;
    u64 max_price_impact_bps = 1'000;
    std::optional<u64> max_positions;
    u64 protocol_fee_bps = DEFAULT_PROTOCOL_FEE_BPS;
    u64 lp_fee_bps = DEFAULT_LP_FEE_BPS;
    std::vector<TokenCapsInfo> per_token;

    bool operator==(const ConstraintContextInfo&) const = default;
};

struct MemoryEntryView {
    Tick tick = 0;
    std::string tool;    // buy_token | sell_token | record_observation
    TokenId token_id;    // empty for observations
    u64 fraction_ppm = 0;
    std::string outcome; // settled | rejected:<code> | failed:<reason> | observed
    std::string note;

    bool operator==(const MemoryEntryView&) const = default;
};

struct ClockInfo {
    Tick tick = 0;
    i64 unix_sec = 0;

    bool operator==(const ClockInfo&) const = default;
};

// Typed decision context. Section order, static prose and the template
// variant are deliberately NOT part of this structure, so equality is
// order-independent and survives prose-only template edits.
struct StructuredBrief {
    ClockInfo clock;
    SliderConfig sliders;
    std::vector<StrategyView> strategies;
    std::vector<TokenStats> market;
    std::string eth_usd_display;
    PortfolioContext portfolio;
    ConstraintContextInfo constraints;
    ReapContextInfo reap;
    LaunchContextInfo launch;
    std::vector<MemoryEntryView> memory; // newest last, bounded upstream

    bool operator==(const StructuredBrief&) const = default;
};

struct RenderedBrief {
    std::string text;
    std::string brief_hash; // sha256 hex of text
    std::string template_variant_id;
};

struct CompiledBrief {
    StructuredBrief structured;
    RenderedBrief rendered;
};

enum class CompileError { MissingSectionPayload };

// --- deterministic formatting helpers ---------------------------------------

namespace render {

inline std::string signed_bps_pct(i64 bps) {
    i64 a = bps < 0 ? -bps : bps;
    std::string s = bps < 0 ? "-" : "+";
    s += std::to_string(a / 100);
    s += '.';
    s += char('0' + (a % 100) / 10);
    s += char('0' + a % 10);
    s += '%';
    return s;
}

inline std::string bps_pct(u64 bps) {
    std::string s = std::to_string(bps / 100);
    if (bps % 100) {
        s += '.';
        s += char('0' + (bps % 100) / 10);
        if (bps % 10) s += char('0' + bps % 10);
    }
    s += '%';
    return s;
}

inline std::string duration_from_ticks(Tick ticks) {
    if (ticks < 0) ticks = 0;
    i64 minutes = ticks * 5;
    i64 h = minutes / 60, m = minutes % 60;
    std::string s;
    if (h > 0) {
        s += std::to_string(h);
        s += "h";
        if (m) {
            s += " ";
            s += std::to_string(m);
            s += "m";
        }
    } else {
        s += std::to_string(m);
        s += "m";
    }
    return s;
}

inline std::string iso_utc(i64 unix_sec) {
    // Civil-from-days (Howard Hinnant's algorithm); dates well past 2100 are
    // out of scope for a desk-scale simulator but the math is general.
    i64 days = unix_sec / 86'400;
    i64 secs = unix_sec % 86'400;
    if (secs < 0) {
        secs += 86'400;
        --days;
    }
    i64 z = days + 719'468;
    i64 era = (z >= 0 ? z : z - 146'096) / 146'097;
    i64 doe = z - era * 146'097;
    i64 yoe = (doe - doe / 1460 + doe / 36'524 - doe / 146'096) / 365;
    i64 y = yoe + era * 400;
    i64 doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    i64 mp = (5 * doy + 2) / 153;
    i64 d = doy - (153 * mp + 2) / 5 + 1;
    i64 m = mp + (mp < 10 ? 3 : -9);
    if (m <= 2) ++y;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04lld-%02d-%02dT%02d:%02d:%02dZ", (long long)y, int(m),
                  int(d), int(secs / 3600), int(secs / 60 % 60), int(secs % 60));
    return buf;
}

inline std::string eth_str(Eth v) { return v.to_decimal_string(); }
inline std::string price_str(u128 price_e18) { return Eth(price_e18).to_decimal_string(); }
inline std::string fraction_str(u64 ppm) { return ppm_of(Eth(QUANTA), ppm).to_decimal_string(); }

// Placeholder substitution for static template prose.
inline std::string substitute(std::string text, const ConstraintContextInfo& c) {
    auto replace_all = [&](std::string_view key, const std::string& value) {
        std::string pat = "{{" + std::string(key) + "}}";
        std::size_t p = 0;
        while ((p = text.find(pat, p)) != std::string::npos) {
            text.replace(p, pat.size(), value);
            p += value.size();
        }
    };
    replace_all("fee_total_pct", bps_pct(c.protocol_fee_bps + c.lp_fee_bps));
    replace_all("fee_protocol_pct", bps_pct(c.protocol_fee_bps));
    replace_all("fee_lp_pct", bps_pct(c.lp_fee_bps));
    replace_all("max_trade_pct", bps_pct(c.max_trade_bps));
    replace_all("max_impact_pct", bps_pct(c.max_price_impact_bps));
    replace_all("slippage_pct", bps_pct(c.slippage_bps));
    return text;
}

} // namespace render

namespace detail {

inline void render_market_rows(std::string& out, const StructuredBrief& b) {
    if (!b.eth_usd_display.empty()) {
        out += "- ETH/USD price: $";
        out += b.eth_usd_display;
        out += '\n';
    }
    out += "- Each token has a supply of 1,000,000,000\n";
    out += "- These are the current and ONLY tokens:\n";
    for (const auto& r : b.market) {
        out += "- ";
        out += r.symbol;
        out += " | Price: ";
        out += render::price_str(r.price_e18);
        out += " ETH | Age: ";
        out += render::duration_from_ticks(r.age);
        out += '\n';
        if (r.pct_change_5m_bps || r.pct_change_1h_bps || r.pct_change_6h_bps ||
            r.pct_change_24h_bps || r.pct_change_all_bps) {
            out += "  Price Changes:";
            auto piece = [&](const char* lbl, const std::optional<i64>& v) {
                if (v) {
                    out += ' ';
                    out += lbl;
                    out += ": ";
                    out += render::signed_bps_pct(*v);
                }
            };
            piece("5m", r.pct_change_5m_bps);
            piece("1h", r.pct_change_1h_bps);
            piece("6h", r.pct_change_6h_bps);
            piece("24h", r.pct_change_24h_bps);
            piece("all", r.pct_change_all_bps);
            out += '\n';
        }
        if (r.volume_5m || r.volume_1h) {
            out += "  Volume:";
            if (r.volume_5m) {
                out += " 5m: ";
                out += render::eth_str(*r.volume_5m);
                out += " ETH";
            }
            if (r.volume_1h) {
                out += " 1h: ";
                out += render::eth_str(*r.volume_1h);
                out += " ETH";
            }
            out += '\n';
        }
        if (r.net_flow_5m_abs || r.net_flow_1h_abs) {
            auto flow = [&](const std::optional<Eth>& v, bool neg) -> std::string {
                if (!v) return "-";
                std::string s = neg ? "-" : "+";
                s += render::eth_str(*v);
                s += " ETH";
                return s;
            };
            out += "  Flow: ";
            out += flow(r.net_flow_5m_abs, r.net_flow_5m_negative);
            out += " / ";
            out += flow(r.net_flow_1h_abs, r.net_flow_1h_negative);
            out += '\n';
        }
        out += "  Holders: ";
        out += std::to_string(r.holders);
        out += " | 5m traders: ";
        out += std::to_string(r.unique_traders_5m);
        out += '\n';
    }
}

inline void render_strategies(std::string& out, const StructuredBrief& b) {
    if (b.strategies.empty()) {
        out += "- No active strategies.\n";
        return;
    }
    for (const auto& s : b.strategies) {
        out += "- ";
        out += s.label;
        out += " [";
        out += priority_name(s.priority);
        out += "] ";
        out += s.text;
        if (s.expiry) {
            out += " (expires tick ";
            out += std::to_string(*s.expiry);
            out += ")";
        }
        out += '\n';
    }
}

inline void render_router(std::string& out, const StructuredBrief& b) {
    bool any = false;
    for (const auto& s : b.strategies) {
        if (s.priority != Priority::High) continue;
        any = true;
        const char* kind = "Unclassified";
        switch (s.directive.kind) {
            case DirectiveClass::Kind::Immediate: kind = "Immediate-action"; break;
            case DirectiveClass::Kind::Triggered: kind = "Triggered-action"; break;
            case DirectiveClass::Kind::Restriction: kind = "Restriction"; break;
            case DirectiveClass::Kind::HoldRule: kind = "Hold rule"; break;
            case DirectiveClass::Kind::Unclassified: kind = "Unclassified"; break;
        }
        out += "- ";
        out += s.label;
        out += ": ";
        out += kind;
        out += " | status: ";
        out += strategy_status_name(s.status);
        out += '\n';
    }
    if (!any) out += "- No [HIGH] strategies to route.\n";
}

inline void render_settings(std::string& out, const StructuredBrief& b) {
    const auto& s = b.sliders;
    out += "- Trading Activity: " + std::to_string(s.trading_activity) + " / 5\n";
    out += "- Asset Risk Preference: " + std::to_string(s.asset_risk_preference) + " / 5\n";
    out += "- Trade Size: " + std::to_string(s.trade_size) + " / 5\n";
    out += "- Holding Style: " + std::to_string(s.holding_style) + " / 5\n";
    out += "- Diversification: " + std::to_string(s.diversification) + " / 5\n";
}

inline void render_portfolio(std::string& out, const StructuredBrief& b) {
    const auto& p = b.portfolio;
    out += "- ETH: ";
    out += render::eth_str(p.eth_balance);
    out += '\n';
    for (const auto& pos : p.positions) {
        out += "- ";
        out += pos.symbol.empty() ? pos.token_id : pos.symbol;
        out += ": Balance: ";
        out += TokenUnits(pos.balance).to_decimal_string();
        out += " | Avg Entry: ";
        out += render::price_str(pos.avg_entry_e18);
        if (pos.unrealized_pnl_bps) {
            out += " | Unrealized PnL: ";
            out += render::signed_bps_pct(*pos.unrealized_pnl_bps);
        }
        out += " | Time Held: ";
        out += render::duration_from_ticks(pos.time_held);
        out += '\n';
    }
    out += "- Deployment: ";
    out += render::bps_pct(p.deployment_bps);
    out += " of vault value in tokens\n";
}

inline void render_constraints(std::string& out, const StructuredBrief& b) {
    const auto& c = b.constraints;
    out += "- Max Trade Amount: ";
    out += render::bps_pct(c.max_trade_bps);
    out += " of available ETH per trade. This is a hard execution cap.\n";
    out += "- Slippage tolerance: ";
    out += render::bps_pct(c.slippage_bps);
    out += " minimum-output check at settlement.\n";
    out += "- Max price impact: ";
    out += render::bps_pct(c.max_price_impact_bps);
    out += " per trade, fee-inclusive.\n";
    if (c.max_positions) {
        out += "- Max concurrent positions: ";
        out += std::to_string(*c.max_positions);
        out += " (hard check).\n";
    }
    for (const auto& t : c.per_token) {
        out += "- ";
        out += t.symbol;
        out += ": BUY max ";
        out += render::eth_str(t.buy_cap_impact);
        out += " ETH";
        if (t.has_position && !t.sell_uncapped) {
            out += ", SELL max ";
            out += t.sell_cap_impact.to_decimal_string();
            out += " ";
            out += t.symbol;
        }
        if (t.newcoin_capped) {
            out += " | new-coin BUY cap ";
            out += render::eth_str(t.newcoin_cap);
            out += " ETH";
        }
        out += '\n';
    }
}

inline void render_reap(std::string& out, const StructuredBrief& b) {
    const auto& r = b.reap;
    if (!r.scheduled) {
        out += "Next Reap: none scheduled\n";
        return;
    }
    out += "Next Reap: tick ";
    out += std::to_string(r.next_at);
    out += " (in ";
    out += render::duration_from_ticks(r.next_at - b.clock.tick);
    out += ")\n";
    out += "Current lower market cap:\n";
    for (const auto& s : r.source_candidates) {
        out += "- ";
        out += s;
        out += '\n';
    }
    out += "Current higher market cap:\n";
    for (const auto& s : r.target_candidates) {
        out += "- ";
        out += s;
        out += '\n';
    }
}

inline void render_launch(std::string& out, const StructuredBrief& b) {
    const auto& l = b.launch;
    if (!l.upcoming) {
        out += "No token launch scheduled.\n";
        return;
    }
    out += "A new token will launch in ";
    out += render::duration_from_ticks(l.at - b.clock.tick);
    out += ".\n";
    if (!l.symbol.empty()) {
        out += "Token: ";
        out += l.symbol;
        out += '\n';
    }
}

inline void render_memory(std::string& out, const StructuredBrief& b) {
    if (b.memory.empty()) {
        out += "- No recent actions recorded.\n";
        return;
    }
    for (const auto& m : b.memory) {
        out += "- ";
        out += render::iso_utc(b.clock.unix_sec - (b.clock.tick - m.tick) * 300);
        out += " | ";
        out += m.tool;
        if (!m.token_id.empty()) {
            out += " | ";
            out += m.token_id;
            out += " fraction=";
            out += render::fraction_str(m.fraction_ppm);
        }
        out += " | ";
        out += m.outcome;
        if (!m.note.empty()) {
            out += " | ";
            out += m.note;
        }
        out += '\n';
    }
}

inline void render_clock(std::string& out, const StructuredBrief& b) {
    out += "- Current Time: ";
    out += render::iso_utc(b.clock.unix_sec);
    out += " (tick ";
    out += std::to_string(b.clock.tick);
    out += ")\n";
}

inline void render_payload(std::string& out, SectionId s, const StructuredBrief& b) {
    switch (s) {
        case SectionId::MarketSnapshot: render_market_rows(out, b); break;
        case SectionId::ActiveStrategies: render_strategies(out, b); break;
        case SectionId::DirectiveRouter: render_router(out, b); break;
        case SectionId::ActiveSettings: render_settings(out, b); break;
        case SectionId::PortfolioContext: render_portfolio(out, b); break;
        case SectionId::ExecutionConstraints: render_constraints(out, b); break;
        case SectionId::ReapContext: render_reap(out, b); break;
        case SectionId::UpcomingLaunch: render_launch(out, b); break;
        case SectionId::PreviousDecisions: render_memory(out, b); break;
        case SectionId::CurrentState: render_clock(out, b); break;
        case SectionId::SystemRules:
        case SectionId::OperatingRules:
            break; // static prose only
    }
}

} // namespace detail

// Inputs the engine assembles per invocation. Reap and launch payloads are
// optional at the API level; an enabled section with an absent payload is a
// MissingSectionPayload error (the engine always materializes both).
struct BriefInputs {
    const ConfigCommit* commit = nullptr;
    std::vector<StrategyView> strategies; // active, classified, with status
    const MarketSnapshot* snapshot = nullptr;
    const PortfolioContext* portfolio = nullptr;
    ConstraintContextInfo constraints;
    std::optional<ReapContextInfo> reap;
    std::optional<LaunchContextInfo> launch;
    std::vector<MemoryEntryView> memory;
    ClockInfo clock;
};

inline Expected<CompiledBrief, CompileError> compile_brief(const BriefTemplate& tmpl,
                                                           const BriefInputs& in) {
    if (!in.commit || !in.snapshot || !in.portfolio) throw std::invalid_argument(
        "compile_brief: commit, snapshot and portfolio payloads are required");
    if (tmpl.enabled(SectionId::ReapContext) && !in.reap) return CompileError::MissingSectionPayload;
    if (tmpl.enabled(SectionId::UpcomingLaunch) && !in.launch)
        return CompileError::MissingSectionPayload;

    CompiledBrief out;
    StructuredBrief& b = out.structured;
    b.clock = in.clock;
    b.sliders = in.commit->sliders;
    b.strategies = in.strategies;
    b.market = in.snapshot->rows;
    b.eth_usd_display = in.snapshot->eth_usd_display;
    b.portfolio = *in.portfolio;
    b.constraints = in.constraints;
    b.reap = in.reap.value_or(ReapContextInfo{});
    b.launch = in.launch.value_or(LaunchContextInfo{});
    b.memory = in.memory;

    std::string text;
    text.reserve(8192);
    for (SectionId s : tmpl.section_order) {
        text += "## ";
        text += section_title(s);
        text += '\n';
        auto st = tmpl.static_texts.find(s);
        if (st != tmpl.static_texts.end() && !st->second.empty()) {
            text += render::substitute(st->second, b.constraints);
            if (text.back() != '\n') text += '\n';
        }
        detail::render_payload(text, s, b);
        for (const auto& rule : tmpl.conditional_rules) {
            if (rule.section != s) continue;
            if (!rule.predicate.eval(b.sliders)) continue;
            text += render::substitute(rule.text, b.constraints);
            if (text.back() != '\n') text += '\n';
        }
        text += '\n';
    }

    out.rendered.text = std::move(text);
    out.rendered.brief_hash = sha256_hex(out.rendered.text);
    out.rendered.template_variant_id = tmpl.variant_id;
    return out;
}

// --- line diff ---------------------------------------------------------------

struct BriefDiff {
    std::vector<std::string> lines; // "  x" unchanged, "- x" left, "+ x" right
    bool structurally_equal = false;

    std::string to_string() const {
        std::string out;
        for (const auto& l : lines) {
            out += l;
            out += '\n';
        }
        return out;
    }
};

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            out.emplace_back(text.substr(start, i - start));
            start = i + 1;
        }
    }
    if (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

inline BriefDiff brief_diff(const CompiledBrief& a, const CompiledBrief& b) {
    BriefDiff d;
    d.structurally_equal = a.structured == b.structured;
    auto la = split_lines(a.rendered.text);
    auto lb = split_lines(b.rendered.text);

    // Classic LCS table; briefs are small documents.
    std::size_t n = la.size(), m = lb.size();
    std::vector<std::vector<u64>> lcs(n + 1, std::vector<u64>(m + 1, 0));
    for (std::size_t i = n; i-- > 0;)
        for (std::size_t j = m; j-- > 0;)
            lcs[i][j] = la[i] == lb[j] ? lcs[i + 1][j + 1] + 1
                                       : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    std::size_t i = 0, j = 0;
    while (i < n && j < m) {
        if (la[i] == lb[j]) {
            d.lines.push_back("  " + la[i]);
            ++i, ++j;
        } else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
            d.lines.push_back("- " + la[i]);
            ++i;
        } else {
            d.lines.push_back("+ " + lb[j]);
            ++j;
        }
    }
    while (i < n) d.lines.push_back("- " + la[i++]);
    while (j < m) d.lines.push_back("+ " + lb[j++]);
    return d;
}

} // namespace vaultsim
