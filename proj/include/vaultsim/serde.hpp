// Canonical JSON forms. nlohmann::json objects keep keys sorted, so dumps are
// byte-deterministic; 128-bit quantities travel as decimal strings.
#pragma once

#include <json.hpp>

#include "vaultsim/brief.hpp"

namespace vaultsim {

using Json = nlohmann::json;

inline Json to_json(const SliderConfig& s) {
    return Json{{"ta", s.trading_activity},
                {"arp", s.asset_risk_preference},
                {"ts", s.trade_size},
                {"hs", s.holding_style},
                {"div", s.diversification}};
}

inline SliderConfig slider_config_from_json(const Json& j) {
    SliderConfig s;
    s.trading_activity = j.at("ta").get<int>();
    s.asset_risk_preference = j.at("arp").get<int>();
    s.trade_size = j.at("ts").get<int>();
    s.holding_style = j.at("hs").get<int>();
    s.diversification = j.at("div").get<int>();
    return s;
}

inline Json to_json(const TokenStats& r) {
    Json j{{"token", r.token_id},
           {"symbol", r.symbol},
           {"price_e18", u128_to_string(r.price_e18)},
           {"age", r.age},
           {"holders", r.holders},
           {"traders_5m", r.unique_traders_5m}};
    auto opt = [&](const char* k, const std::optional<i64>& v) {
        if (v) j[k] = *v;
    };
    opt("pct_5m_bps", r.pct_change_5m_bps);
    opt("pct_1h_bps", r.pct_change_1h_bps);
    opt("pct_6h_bps", r.pct_change_6h_bps);
    opt("pct_24h_bps", r.pct_change_24h_bps);
    opt("pct_all_bps", r.pct_change_all_bps);
    if (r.volume_5m) j["vol_5m"] = u128_to_string(r.volume_5m->raw);
    if (r.volume_1h) j["vol_1h"] = u128_to_string(r.volume_1h->raw);
    if (r.net_flow_5m_abs) {
        j["flow_5m"] = u128_to_string(r.net_flow_5m_abs->raw);
        j["flow_5m_neg"] = r.net_flow_5m_negative;
    }
    if (r.net_flow_1h_abs) {
        j["flow_1h"] = u128_to_string(r.net_flow_1h_abs->raw);
        j["flow_1h_neg"] = r.net_flow_1h_negative;
    }
    return j;
}

inline Json to_json(const DirectiveClass& d) {
    Json j{{"kind", int(d.kind)},
           {"verb", int(d.verb)},
           {"token", d.token},
           {"scope", int(d.restriction_scope)},
           {"buy_only", d.restriction_buy_only},
           {"hold_tokens", d.hold_tokens}};
    if (d.fraction_ppm) j["fraction_ppm"] = *d.fraction_ppm;
    if (d.condition) {
        j["condition"] = Json{{"kind", int(d.condition->kind)},
                              {"token", d.condition->token},
                              {"threshold_bps", d.condition->threshold_bps},
                              {"price_e18", u128_to_string(d.condition->price_e18)}};
    }
    return j;
}

inline Json to_json(const StrategyView& s) {
    Json j{{"label", s.label},
           {"text", s.text},
           {"priority", priority_name(s.priority)},
           {"directive", to_json(s.directive)},
           {"status", strategy_status_name(s.status)}};
    if (s.expiry) j["expiry"] = *s.expiry;
    return j;
}

inline Json to_json(const PositionView& p) {
    Json j{{"token", p.token_id},
           {"symbol", p.symbol},
           {"balance", u128_to_string(p.balance.raw)},
           {"entry_e18", u128_to_string(p.avg_entry_e18)},
           {"spot_e18", u128_to_string(p.spot_e18)},
           {"value", u128_to_string(p.value_at_spot.raw)},
           {"held", p.time_held},
           {"since_trade", p.since_last_trade}};
    if (p.unrealized_pnl_bps) j["pnl_bps"] = *p.unrealized_pnl_bps;
    return j;
}

inline Json to_json(const PortfolioContext& p) {
    Json positions = Json::array();
    for (const auto& v : p.positions) positions.push_back(to_json(v));
    return Json{{"eth", u128_to_string(p.eth_balance.raw)},
                {"positions", positions},
                {"token_value", u128_to_string(p.token_value.raw)},
                {"total_value", u128_to_string(p.total_value.raw)},
                {"deployment_bps", p.deployment_bps},
                {"realized_pnl_wei", std::to_string((long long)(p.realized_pnl_wei))},
                {"fees_paid", u128_to_string(p.fees_paid.raw)}};
}

inline Json to_json(const ConstraintContextInfo& c) {
    Json per = Json::array();
    for (const auto& t : c.per_token) {
        Json j{{"token", t.token_id},
               {"symbol", t.symbol},
               {"buy_cap", u128_to_string(t.buy_cap_impact.raw)},
               {"sell_uncapped", t.sell_uncapped},
               {"has_position", t.has_position},
               {"newcoin_capped", t.newcoin_capped}};
        if (!t.sell_uncapped) j["sell_cap"] = u128_to_string(t.sell_cap_impact.raw);
        if (t.newcoin_capped) j["newcoin_cap"] = u128_to_string(t.newcoin_cap.raw);
        per.push_back(std::move(j));
    }
    Json j{{"max_trade_bps", c.max_trade_bps},
           {"slippage_bps", c.slippage_bps},
           {"max_impact_bps", c.max_price_impact_bps},
           {"protocol_fee_bps", c.protocol_fee_bps},
           {"lp_fee_bps", c.lp_fee_bps},
           {"per_token", per}};
    if (c.max_positions) j["max_positions"] = *c.max_positions;
    return j;
}

inline Json to_json(const MemoryEntryView& m) {
    return Json{{"tick", m.tick},       {"tool", m.tool},       {"token", m.token_id},
                {"fraction_ppm", m.fraction_ppm}, {"outcome", m.outcome}, {"note", m.note}};
}

inline Json structured_brief_to_json(const StructuredBrief& b) {
    Json strategies = Json::array();
    for (const auto& s : b.strategies) strategies.push_back(to_json(s));
    Json market = Json::array();
    for (const auto& r : b.market) market.push_back(to_json(r));
    Json memory = Json::array();
    for (const auto& m : b.memory) memory.push_back(to_json(m));
    return Json{{"clock", Json{{"tick", b.clock.tick}, {"unix", b.clock.unix_sec}}},
                {"sliders", to_json(b.sliders)},
                {"strategies", strategies},
                {"market", market},
                {"eth_usd", b.eth_usd_display},
                {"portfolio", to_json(b.portfolio)},
                {"constraints", to_json(b.constraints)},
                {"reap", Json{{"scheduled", b.reap.scheduled},
                              {"next_at", b.reap.next_at},
                              {"sources", b.reap.source_candidates},
                              {"targets", b.reap.target_candidates}}},
                {"launch", Json{{"upcoming", b.launch.upcoming},
                                {"at", b.launch.at},
                                {"symbol", b.launch.symbol}}},
                {"memory", memory}};
}

namespace digest_detail {

// Flat canonical serialization for hashing: every field in fixed order,
// strings length-prefixed so the encoding is injective. Much cheaper than
// building a JSON document per invocation; the JSON form above remains the
// interchange representation (adapter sidecars).
struct Sink {
    std::string buf;

    Sink() { buf.reserve(4096); }
    void str(const std::string& s) {
        num(i64(s.size()));
        buf += s;
        buf += ';';
    }
    void num(i64 v) {
        buf += std::to_string(v);
        buf += ',';
    }
    void unum(u128 v) {
        buf += u128_to_string(v);
        buf += ',';
    }
    void opt(const std::optional<i64>& v) {
        if (v) num(*v);
        else buf += "_,";
    }
    void opt(const std::optional<Eth>& v) {
        if (v) unum(v->raw);
        else buf += "_,";
    }
    void flag(bool b) { buf += b ? '1' : '0'; }
};

} // namespace digest_detail

// Order-insensitive identity of the decision context: equal StructuredBriefs
// produce equal digests and unequal ones differ (modulo hash collisions).
inline std::string structured_brief_digest(const StructuredBrief& b) {
    digest_detail::Sink s;
    s.num(b.clock.tick);
    s.num(b.clock.unix_sec);
    for (int v : {b.sliders.trading_activity, b.sliders.asset_risk_preference,
                  b.sliders.trade_size, b.sliders.holding_style, b.sliders.diversification})
        s.num(v);
    s.num(i64(b.strategies.size()));
    for (const auto& sv : b.strategies) {
        s.str(sv.label);
        s.str(sv.text);
        s.num(int(sv.priority));
        s.opt(sv.expiry ? std::optional<i64>(*sv.expiry) : std::nullopt);
        const DirectiveClass& d = sv.directive;
        s.num(int(d.kind));
        s.num(int(d.verb));
        s.str(d.token);
        s.opt(d.fraction_ppm ? std::optional<i64>(i64(*d.fraction_ppm)) : std::nullopt);
        s.flag(d.condition.has_value());
        if (d.condition) {
            s.num(int(d.condition->kind));
            s.str(d.condition->token);
            s.num(d.condition->threshold_bps);
            s.unum(d.condition->price_e18);
        }
        s.num(int(d.restriction_scope));
        s.flag(d.restriction_buy_only);
        s.num(i64(d.hold_tokens.size()));
        for (const auto& t : d.hold_tokens) s.str(t);
        s.num(int(sv.status));
    }
    s.num(i64(b.market.size()));
    for (const auto& r : b.market) {
        s.str(r.token_id);
        s.str(r.symbol);
        s.unum(r.price_e18);
        s.num(r.age);
        s.opt(r.pct_change_5m_bps);
        s.opt(r.pct_change_1h_bps);
        s.opt(r.pct_change_6h_bps);
        s.opt(r.pct_change_24h_bps);
        s.opt(r.pct_change_all_bps);
        s.opt(r.volume_5m);
        s.opt(r.volume_1h);
        s.opt(r.net_flow_5m_abs);
        s.flag(r.net_flow_5m_negative);
        s.opt(r.net_flow_1h_abs);
        s.flag(r.net_flow_1h_negative);
        s.num(i64(r.holders));
        s.num(i64(r.unique_traders_5m));
    }
    s.str(b.eth_usd_display);
    s.unum(b.portfolio.eth_balance.raw);
    s.num(i64(b.portfolio.positions.size()));
    for (const auto& p : b.portfolio.positions) {
        s.str(p.token_id);
        s.str(p.symbol);
        s.unum(p.balance.raw);
        s.unum(p.avg_entry_e18);
        s.unum(p.spot_e18);
        s.unum(p.value_at_spot.raw);
        s.opt(p.unrealized_pnl_bps);
        s.num(p.time_held);
        s.num(p.since_last_trade);
    }
    s.unum(b.portfolio.token_value.raw);
    s.unum(b.portfolio.total_value.raw);
    s.num(i64(b.portfolio.deployment_bps));
    s.num(i64(b.portfolio.realized_pnl_wei));
    s.unum(b.portfolio.fees_paid.raw);
    const auto& c = b.constraints;
    s.num(i64(c.max_trade_bps));
    s.num(i64(c.slippage_bps));
    s.num(i64(c.max_price_impact_bps));
    s.opt(c.max_positions ? std::optional<i64>(i64(*c.max_positions)) : std::nullopt);
    s.num(i64(c.protocol_fee_bps));
    s.num(i64(c.lp_fee_bps));
    s.num(i64(c.per_token.size()));
    for (const auto& t : c.per_token) {
        s.str(t.token_id);
        s.str(t.symbol);
        s.unum(t.buy_cap_impact.raw);
        s.flag(t.sell_uncapped);
        s.unum(t.sell_cap_impact.raw);
        s.flag(t.has_position);
        s.flag(t.newcoin_capped);
        s.unum(t.newcoin_cap.raw);
    }
    s.flag(b.reap.scheduled);
    s.num(b.reap.next_at);
    s.num(i64(b.reap.source_candidates.size()));
    for (const auto& t : b.reap.source_candidates) s.str(t);
    s.num(i64(b.reap.target_candidates.size()));
    for (const auto& t : b.reap.target_candidates) s.str(t);
    s.flag(b.launch.upcoming);
    s.num(b.launch.at);
    s.str(b.launch.symbol);
    s.num(i64(b.memory.size()));
    for (const auto& m : b.memory) {
        s.num(m.tick);
        s.str(m.tool);
        s.str(m.token_id);
        s.num(i64(m.fraction_ppm));
        s.str(m.outcome);
        s.str(m.note);
    }
    return sha256_hex(s.buf);
}

} // namespace vaultsim
