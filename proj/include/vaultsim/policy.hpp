// Pluggable decision-makers standing in for the model. The reference policy
// is a transparent rule system: it reproduces the operating layer's metric
// shapes (slider gradients, cooldown discipline, reap holds) without
// simulating semantic judgment. Probe policies deliberately misbehave so the
// guard and analytics can be exercised. Policies see only the StructuredBrief
// and a named rng stream, and emit the wire-format action line.
#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "vaultsim/brief.hpp"
#include "vaultsim/rng.hpp"
#include "vaultsim/toolcall.hpp"

namespace vaultsim {

struct PolicyParams {
    // Endpoints anchored to production gradients (~2.8%..16.8% trade rate,
    // ~2%..95% spend); interiors are implementation anchors.
    double trade_prob[5] = {0.03, 0.06, 0.10, 0.13, 0.17};
    u64 spend_ppm[5] = {20'000, 100'000, 250'000, 500'000, 950'000};
    Tick min_hold_ticks[5] = {2, 6, 12, 36, 96};
    i64 stop_loss_bps[5] = {-600, -900, -1200, -1800, -2500};
    i64 profit_target_bps[5] = {800, 1500, 2500, 4000, 6000};
    Tick min_token_age[5] = {288, 288, 72, 12, 0}; // by ARP; 288 ticks = 24h
    std::size_t max_positions[5] = {1, 2, 3, 5, 8};

    Tick cooldown_buy_buy = 4;
    Tick cooldown_sell_sell = 4;
    Tick cooldown_sell_rebuy = 8;
    Tick fresh_signal_window = 4; // TA>=4 gate
    i64 fresh_signal_move_bps = 150;
    u64 target_sell_ppm = 500'000;
    // Tape move below which a pacing observation cites fees rather than
    // momentum: the round-trip cost amortized over a typical hold. Calibrated
    // fee awareness tags observations; it never blocks the TA pacing itself.
    i64 fee_note_bps = 60;
};

struct PolicySpec {
    enum class Kind {
        Reference,
        CadenceTrader,
        RuleFabricator,
        FeeParalyzed,
        Overspender,
        SchemaBreaker,
        External,
    };
    Kind kind = Kind::Reference;
    u64 cadence_period = 6; // CadenceTrader

    // External adapter transport; consumed by the engine, not by this module.
    std::vector<std::string> command; // child-process argv
    std::string connect_host;         // or a local socket endpoint
    int connect_port = 0;
    i64 timeout_ms = 2000;
};

inline std::optional<PolicySpec::Kind> policy_kind_from_name(std::string_view n) {
    if (n == "reference") return PolicySpec::Kind::Reference;
    if (n == "cadence_trader") return PolicySpec::Kind::CadenceTrader;
    if (n == "rule_fabricator") return PolicySpec::Kind::RuleFabricator;
    if (n == "fee_paralyzed") return PolicySpec::Kind::FeeParalyzed;
    if (n == "overspender") return PolicySpec::Kind::Overspender;
    if (n == "schema_breaker") return PolicySpec::Kind::SchemaBreaker;
    if (n == "external") return PolicySpec::Kind::External;
    return std::nullopt;
}

inline const char* policy_kind_name(PolicySpec::Kind k) {
    switch (k) {
        case PolicySpec::Kind::Reference: return "reference";
        case PolicySpec::Kind::CadenceTrader: return "cadence_trader";
        case PolicySpec::Kind::RuleFabricator: return "rule_fabricator";
        case PolicySpec::Kind::FeeParalyzed: return "fee_paralyzed";
        case PolicySpec::Kind::Overspender: return "overspender";
        case PolicySpec::Kind::SchemaBreaker: return "schema_breaker";
        case PolicySpec::Kind::External: return "external";
    }
    return "?";
}

namespace policy_detail {

struct LastActions {
    std::optional<Tick> last_buy;
    std::optional<Tick> last_sell;
    std::optional<Tick> last_any;
};

inline LastActions last_settled_actions(const std::vector<MemoryEntryView>& memory,
                                        const TokenId& token) {
    LastActions out;
    for (const auto& m : memory) {
        if (m.outcome != "settled" || m.token_id != token) continue;
        if (m.tool == "buy_token") out.last_buy = m.tick;
        if (m.tool == "sell_token") out.last_sell = m.tick;
        out.last_any = m.tick;
    }
    return out;
}

inline const PositionView* largest_position(const PortfolioContext& p) {
    const PositionView* best = nullptr;
    for (const auto& pos : p.positions)
        if (!best || pos.value_at_spot > best->value_at_spot ||
            (pos.value_at_spot == best->value_at_spot && pos.token_id < best->token_id))
            best = &pos;
    return best;
}

inline const PositionView* find_position(const PortfolioContext& p, const TokenId& id) {
    for (const auto& pos : p.positions)
        if (pos.token_id == id) return &pos;
    return nullptr;
}

inline std::optional<i64> momentum_score(const TokenStats& r) {
    std::optional<i64> base = r.pct_change_1h_bps ? r.pct_change_1h_bps : r.pct_change_5m_bps;
    if (!base) return std::nullopt;
    i64 s = *base;
    if (r.net_flow_5m_abs) s += r.net_flow_5m_negative ? -100 : 100;
    return s;
}

inline bool is_reap_source(const StructuredBrief& b, const std::string& symbol) {
    if (!b.reap.scheduled) return false;
    return !b.reap.source_candidates.empty() && b.reap.source_candidates.front() == symbol;
}

inline ToolCall observe(ReasonTag tag, std::string note) {
    ToolCall c;
    c.action = ToolCall::Action::Observe;
    c.reason_tags = {tag};
    c.note = std::move(note);
    return c;
}

} // namespace policy_detail

// The deterministic decision hierarchy:
//   1 pending HIGH immediate action -> execute
//   2 fired HIGH triggered action   -> execute
//   3 active HIGH restriction/hold  -> observe, compliant
//   4 slider-paced trading gated by p(TA), sized by s(TS), filtered by ARP
//     bands, hold-style bands, diversification cap, cooldowns, the TA>=4
//     fresh-signal gate and the reap-hold preference
//   5 otherwise observe with the dominant blocking reason
inline ToolCall reference_policy_decide(const StructuredBrief& brief, RngStream& rng,
                                        const PolicyParams& params = {}) {
    using policy_detail::observe;
    const Tick now = brief.clock.tick;
    const SliderConfig& s = brief.sliders;
    const u64 spend_ppm = params.spend_ppm[s.trade_size - 1];

    auto execute_directive = [&](const StrategyView& sv) -> std::optional<ToolCall> {
        const DirectiveClass& d = sv.directive;
        DirectiveClass::Verb verb = d.verb;
        if (verb == DirectiveClass::Verb::Liquidate || verb == DirectiveClass::Verb::Sell) {
            const PositionView* pos = nullptr;
            if (!d.token.empty()) pos = policy_detail::find_position(brief.portfolio, d.token);
            if (!pos) pos = policy_detail::largest_position(brief.portfolio);
            if (!pos) return std::nullopt; // infeasible now
            ToolCall c;
            c.action = ToolCall::Action::Sell;
            c.token_id = pos->token_id;
            c.fraction_ppm = verb == DirectiveClass::Verb::Liquidate
                                 ? 1'000'000
                                 : d.fraction_ppm.value_or(1'000'000);
            c.strategy_label = sv.label;
            c.reason_tags = {ReasonTag::StrategyExecution};
            c.note = "executing " + sv.label;
            return c;
        }
        if (verb == DirectiveClass::Verb::Buy) {
            if (brief.portfolio.eth_balance.is_zero()) return std::nullopt;
            TokenId token = d.token;
            bool live = false;
            for (const auto& r : brief.market) live |= r.symbol == token;
            if (!live) {
                if (brief.market.empty()) return std::nullopt;
                token = brief.market.front().symbol;
            }
            ToolCall c;
            c.action = ToolCall::Action::Buy;
            c.token_id = token;
            c.fraction_ppm = d.fraction_ppm.value_or(spend_ppm);
            c.strategy_label = sv.label;
            c.reason_tags = {ReasonTag::StrategyExecution};
            c.note = "executing " + sv.label;
            return c;
        }
        return std::nullopt;
    };

    // 1) pending HIGH immediate actions
    for (const auto& sv : brief.strategies) {
        if (sv.priority != Priority::High) continue;
        if (sv.directive.kind != DirectiveClass::Kind::Immediate) continue;
        if (sv.status == StrategyStatus::Completed) continue;
        if (auto c = execute_directive(sv)) return *c;
    }
    // 2) fired triggered actions
    for (const auto& sv : brief.strategies) {
        if (sv.priority != Priority::High) continue;
        if (sv.directive.kind != DirectiveClass::Kind::Triggered) continue;
        if (sv.status != StrategyStatus::Triggered) continue;
        if (auto c = execute_directive(sv)) return *c;
    }
    // 3) active restrictions / hold rules pin the vault to observation
    for (const auto& sv : brief.strategies) {
        if (sv.priority != Priority::High) continue;
        if (sv.status == StrategyStatus::Completed) continue;
        if (sv.directive.kind == DirectiveClass::Kind::Restriction)
            return observe(ReasonTag::RestrictionCompliant, "compliant with " + sv.label);
        if (sv.directive.kind == DirectiveClass::Kind::HoldRule)
            return observe(ReasonTag::HoldRule, "holding per " + sv.label);
    }

    // 4) slider-paced trading
    bool deployed = !brief.portfolio.positions.empty();
    for (const auto& m : brief.memory) deployed |= m.outcome == "settled";
    auto best_candidate_score = [&]() -> std::optional<i64> {
        std::optional<i64> best;
        for (const auto& r : brief.market) {
            auto sc = policy_detail::momentum_score(r);
            if (sc && (!best || *sc > *best)) best = sc;
        }
        return best;
    };

    double gate = rng.next_u01();
    if (gate >= params.trade_prob[s.trading_activity - 1]) {
        auto best = best_candidate_score();
        if (deployed && best && *best < params.fee_note_bps && *best > -params.fee_note_bps)
            return observe(ReasonTag::FeeCost, "expected edge below round-trip fees");
        return observe(ReasonTag::Momentum, "pacing per trading activity");
    }

    bool saw_cooldown = false, saw_reap_hold = false;

    // sells: stop-loss and profit-target bands, reap-hold preference
    for (const auto& pos : brief.portfolio.positions) {
        if (!pos.unrealized_pnl_bps) continue;
        bool stop = *pos.unrealized_pnl_bps <= params.stop_loss_bps[s.holding_style - 1];
        bool target = *pos.unrealized_pnl_bps >= params.profit_target_bps[s.holding_style - 1] &&
                      pos.time_held >= params.min_hold_ticks[s.holding_style - 1];
        if (!stop && !target) continue;
        if (policy_detail::is_reap_source(brief, pos.symbol.empty() ? pos.token_id : pos.symbol)) {
            saw_reap_hold = true; // hold through the reap rather than sell the crash
            continue;
        }
        auto last = policy_detail::last_settled_actions(brief.memory, pos.token_id);
        if (last.last_sell && now - *last.last_sell < params.cooldown_sell_sell) {
            saw_cooldown = true;
            continue;
        }
        ToolCall c;
        c.action = ToolCall::Action::Sell;
        c.token_id = pos.token_id;
        c.fraction_ppm = stop ? 1'000'000 : params.target_sell_ppm;
        c.reason_tags = {stop ? ReasonTag::StopLoss : ReasonTag::ProfitTarget};
        c.note = stop ? "stop-loss band hit" : "profit target reached";
        return c;
    }

    // buys
    if (!brief.portfolio.eth_balance.is_zero() &&
        !ppm_of(brief.portfolio.eth_balance, spend_ppm).is_zero()) {
        Eth spend_eth = ppm_of(brief.portfolio.eth_balance, spend_ppm);
        auto caps_for = [&](const TokenId& id) -> const TokenCapsInfo* {
            for (const auto& t : brief.constraints.per_token)
                if (t.token_id == id) return &t;
            return nullptr;
        };
        const TokenStats* best = nullptr;
        std::optional<i64> best_score;
        bool best_known = false;
        for (const auto& r : brief.market) {
            if (r.age < params.min_token_age[s.asset_risk_preference - 1]) continue;
            if (policy_detail::is_reap_source(brief, r.symbol)) continue; // about to delist
            // respect the rendered execution constraints: stay under the
            // new-coin cap and the impact-bounded per-token buy cap
            if (const TokenCapsInfo* caps = caps_for(r.token_id)) {
                if (caps->newcoin_capped && spend_eth > caps->newcoin_cap) continue;
                if (spend_eth > caps->buy_cap_impact) continue;
            }
            bool held = policy_detail::find_position(brief.portfolio, r.token_id) != nullptr;
            if (!held &&
                brief.portfolio.positions.size() >=
                    params.max_positions[s.diversification - 1])
                continue;
            auto last = policy_detail::last_settled_actions(brief.memory, r.token_id);
            if (last.last_buy && now - *last.last_buy < params.cooldown_buy_buy) {
                saw_cooldown = true;
                continue;
            }
            if (last.last_sell && now - *last.last_sell < params.cooldown_sell_rebuy) {
                saw_cooldown = true;
                continue;
            }
            auto score = policy_detail::momentum_score(r);
            if (s.trading_activity >= 4 && last.last_any &&
                now - *last.last_any < params.fresh_signal_window) {
                i64 move = r.pct_change_5m_bps.value_or(0);
                if (move < params.fresh_signal_move_bps && move > -params.fresh_signal_move_bps) {
                    saw_cooldown = true; // fresh-signal gate: no new evidence
                    continue;
                }
            }
            bool better;
            if (!best) better = true;
            else if (score.has_value() != best_known) better = score.has_value();
            else if (score.has_value()) better = *score > *best_score;
            else better = false;
            if (better) {
                best = &r;
                best_score = score;
                best_known = score.has_value();
            }
        }
        if (best) {
            ToolCall c;
            c.action = ToolCall::Action::Buy;
            c.token_id = best->token_id;
            c.fraction_ppm = spend_ppm;
            c.reason_tags = {ReasonTag::Momentum};
            c.note = "strongest tape among eligible tokens";
            return c;
        }
    }

    if (saw_reap_hold) return observe(ReasonTag::ReapHold, "holding reap source for compensation");
    if (saw_cooldown) return observe(ReasonTag::Cooldown, "same-token cooldown in effect");
    return observe(ReasonTag::Momentum, "no eligible candidate");
}

// Probe policies: characteristic misbehavior for guard and analytics tests.
inline std::string probe_policy_decide(const PolicySpec& spec, const StructuredBrief& brief,
                                       RngStream& rng, const PolicyParams& params = {}) {
    using policy_detail::observe;
    const Tick now = brief.clock.tick;
    switch (spec.kind) {
        case PolicySpec::Kind::CadenceTrader: {
            u64 k = spec.cadence_period == 0 ? 1 : spec.cadence_period;
            if (now % Tick(k) != 0)
                return format_tool_call(observe(ReasonTag::Cadence, "waiting out the cadence"));
            u64 phase = u64(now) / k;
            std::string note = "last trade was " + std::to_string(k) + " ticks ago";
            if (phase % 2 == 1) {
                if (const auto* pos = policy_detail::largest_position(brief.portfolio)) {
                    ToolCall c;
                    c.action = ToolCall::Action::Sell;
                    c.token_id = pos->token_id;
                    c.fraction_ppm = 500'000;
                    c.reason_tags = {ReasonTag::Cadence};
                    c.note = note;
                    return format_tool_call(c);
                }
            }
            if (brief.market.empty())
                return format_tool_call(observe(ReasonTag::Cadence, note));
            ToolCall c;
            c.action = ToolCall::Action::Buy;
            c.token_id = brief.market[std::size_t(phase) % brief.market.size()].token_id;
            c.fraction_ppm = 100'000;
            c.reason_tags = {ReasonTag::Cadence};
            c.note = note;
            return format_tool_call(c);
        }
        case PolicySpec::Kind::RuleFabricator: {
            if (const auto* pos = policy_detail::largest_position(brief.portfolio)) {
                ToolCall c;
                c.action = ToolCall::Action::Sell;
                c.token_id = pos->token_id;
                c.fraction_ppm = 500'000;
                c.reason_tags = {ReasonTag::FabricatedRule};
                c.note = "Hierarchy rule #2 requires trimming winners";
                return format_tool_call(c);
            }
            if (!brief.market.empty()) {
                ToolCall c;
                c.action = ToolCall::Action::Buy;
                c.token_id = brief.market.front().token_id;
                c.fraction_ppm = 200'000;
                c.reason_tags = {ReasonTag::FabricatedRule};
                c.note = "Rule A mandates a starter position";
                return format_tool_call(c);
            }
            return format_tool_call(observe(ReasonTag::FabricatedRule, "Rule A: wait"));
        }
        case PolicySpec::Kind::FeeParalyzed:
            return format_tool_call(
                observe(ReasonTag::FeeCost, "fees read first; declining to act"));
        case PolicySpec::Kind::Overspender: {
            if (brief.market.empty())
                return format_tool_call(observe(ReasonTag::Momentum, "nothing to overspend on"));
            ToolCall c;
            c.action = ToolCall::Action::Buy;
            c.token_id = brief.market.front().token_id;
            c.fraction_ppm = 1'000'000; // the full balance, against the max-trade cap
            c.reason_tags = {ReasonTag::Momentum};
            c.note = "all in";
            return format_tool_call(c);
        }
        case PolicySpec::Kind::SchemaBreaker:
            return "buy lots of FEET!!!";
        case PolicySpec::Kind::Reference: {
            ToolCall c = reference_policy_decide(brief, rng, params);
            return format_tool_call(c);
        }
        case PolicySpec::Kind::External:
            throw std::logic_error("external policies are driven by the engine adapter");
    }
    throw std::logic_error("unreachable policy kind");
}

} // namespace vaultsim
