// The deterministic tick loop. Per active vault and tick: read the latest
// mandate, compile the brief against the shared tick-start snapshot, decide,
// parse, validate, settle, trace. Scripted owner actions and config commits
// apply at tick start; launches, then the reap, then the clock advance close
// the tick. Single-threaded by construction: (seed, scenario) fully
// determines every trace byte.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vaultsim/adapter.hpp"
#include "vaultsim/brief.hpp"
#include "vaultsim/guard.hpp"
#include "vaultsim/mandate.hpp"
#include "vaultsim/market.hpp"
#include "vaultsim/policy.hpp"
#include "vaultsim/pool.hpp"
#include "vaultsim/reap.hpp"
#include "vaultsim/rng.hpp"
#include "vaultsim/serde.hpp"
#include "vaultsim/trace.hpp"
#include "vaultsim/vault.hpp"

namespace vaultsim {

struct SimClock {
    Tick tick = 0;
    i64 epoch_unix = 1'767'225'600; // 2026-01-01T00:00:00Z
    static constexpr i64 SECONDS_PER_TICK = 300;

    i64 unix_at(Tick t) const { return epoch_unix + t * SECONDS_PER_TICK; }
};

struct EngineConfig {
    u64 seed = 0;
    double settlement_failure_rate = 0.0;
    enum class SettlementMode { Immediate, Delayed } settlement_mode = SettlementMode::Immediate;
    bool invocation_jitter = false;
    bool decision_shuffle = false; // seeded within-tick order, for herding studies
    bool debug_checks = false;     // conservation + accounting asserts every tick
};

struct LaunchSpec {
    TokenId token_id;
    std::string symbol;
    Tick at = 0;
    Eth eth_seed;
    TokenUnits token_seed;
};

struct ScheduledCommit {
    Tick at = 0;
    VaultId vault_id = 0;
    SliderConfig sliders;
    std::vector<Strategy> strategies;
};

struct ScheduledOwnerAction {
    Tick at = 0;
    VaultId vault_id = 0;
    std::string issuer;
    OwnerAction action;
};

struct StrategyStatusTable {
    u64 config_version = 0;
    std::map<std::string, StrategyStatus> by_label;
};

struct PendingSettlement {
    VaultId vault_id = 0;
    TraceRecord record; // filled except settlement/after
    Accepted verdict;
    ToolCall call;
};

struct World {
    SimClock clock;
    EngineConfig engine_cfg;
    GuardConfig guard_cfg;
    BriefTemplate tmpl;
    u64 protocol_fee_bps = DEFAULT_PROTOCOL_FEE_BPS;
    u64 lp_fee_bps = DEFAULT_LP_FEE_BPS;

    std::map<TokenId, TokenMeta> tokens;
    std::map<TokenId, Pool> pools;
    std::map<TokenId, TokenUnits> treasury; // unpooled genesis supply
    std::map<TokenId, TokenUnits> protocol_dust;
    Eth protocol_eth_collected;

    std::map<VaultId, Vault> vaults;
    std::map<VaultId, MandateLog> mandates;
    std::map<VaultId, std::vector<MemoryEntryView>> memories;
    std::map<VaultId, StrategyStatusTable> strategy_status;
    std::map<VaultId, PolicySpec> policies;

    MarketHistory history;
    std::optional<ReapSchedule> reap;
    bool graduated = false;
    std::vector<LaunchSpec> launches;                      // ascending at
    std::vector<ScheduledCommit> scheduled_commits;        // ascending (at, vault)
    std::vector<ScheduledOwnerAction> scheduled_owner_actions;
    std::string eth_usd_display;

    PolicyParams policy_params;
    std::size_t memory_window = 20;
    TraceStore trace;
    std::vector<PendingSettlement> pending_settlements;
    AdapterManager* adapters = nullptr;

    i128 external_eth_wei = 0; // net funded via scenario/owner actions
    u64 reap_count = 0;
};

struct ConservationReport {
    bool ok = true;
    std::string detail;
};

// Global ETH conservation plus per-live-token supply conservation plus the
// per-vault accounting identity.
inline ConservationReport check_conservation(const World& w) {
    i128 eth = i128(w.protocol_eth_collected.raw);
    for (const auto& [id, p] : w.pools)
        eth += i128(p.eth_reserve.raw) + i128(p.protocol_fee_accrued.raw);
    for (const auto& [id, v] : w.vaults) eth += i128(v.eth_balance.raw);
    if (eth != w.external_eth_wei)
        return {false, "ETH conservation violated: ledger " + std::to_string((long long)eth) +
                           " vs funded " + std::to_string((long long)w.external_eth_wei)};

    for (const auto& [id, meta] : w.tokens) {
        if (meta.delisted) continue;
        u128 total = 0;
        auto pit = w.pools.find(id);
        if (pit != w.pools.end()) total += pit->second.token_reserve.raw;
        auto tit = w.treasury.find(id);
        if (tit != w.treasury.end()) total += tit->second.raw;
        auto dit = w.protocol_dust.find(id);
        if (dit != w.protocol_dust.end()) total += dit->second.raw;
        for (const auto& [vid, v] : w.vaults) {
            auto p = v.positions.find(id);
            if (p != v.positions.end()) total += p->second.balance.raw;
        }
        if (total != meta.total_supply.raw)
            return {false, "token supply violated for " + id};
    }

    for (const auto& [vid, v] : w.vaults)
        if (!accounting_identity_holds(v))
            return {false, "accounting identity violated for vault " + std::to_string(vid)};
    return {};
}

namespace engine_detail {

inline void push_memory(World& w, VaultId vault_id, MemoryEntryView entry) {
    auto& mem = w.memories[vault_id];
    mem.push_back(std::move(entry));
    // bounded history; the brief renders at most memory_window entries anyway
    if (mem.size() > 4 * w.memory_window)
        mem.erase(mem.begin(), mem.begin() + i64(mem.size() - 2 * w.memory_window));
}

inline std::vector<MemoryEntryView> memory_view(const World& w, VaultId vault_id) {
    auto it = w.memories.find(vault_id);
    if (it == w.memories.end()) return {};
    const auto& mem = it->second;
    std::size_t n = std::min(mem.size(), w.memory_window);
    return std::vector<MemoryEntryView>(mem.end() - i64(n), mem.end());
}

inline bool trigger_condition_met(const TriggerCondition& cond, const MarketSnapshot& snap,
                                  const PortfolioContext& portfolio) {
    switch (cond.kind) {
        case TriggerCondition::Kind::PnlGain:
        case TriggerCondition::Kind::PnlDrop: {
            for (const auto& pos : portfolio.positions) {
                if (!cond.token.empty() && pos.token_id != cond.token &&
                    pos.symbol != cond.token)
                    continue;
                if (!pos.unrealized_pnl_bps) continue;
                if (cond.kind == TriggerCondition::Kind::PnlGain
                        ? *pos.unrealized_pnl_bps >= cond.threshold_bps
                        : *pos.unrealized_pnl_bps <= -cond.threshold_bps)
                    return true;
            }
            return false;
        }
        case TriggerCondition::Kind::PriceRise:
        case TriggerCondition::Kind::PriceDrop: {
            for (const auto& row : snap.rows) {
                if (!cond.token.empty() && row.token_id != cond.token &&
                    row.symbol != cond.token)
                    continue;
                if (!row.pct_change_1h_bps) continue; // change measured over 1h
                if (cond.kind == TriggerCondition::Kind::PriceRise
                        ? *row.pct_change_1h_bps >= cond.threshold_bps
                        : *row.pct_change_1h_bps <= -cond.threshold_bps)
                    return true;
            }
            return false;
        }
        case TriggerCondition::Kind::PriceAbove:
        case TriggerCondition::Kind::PriceBelow: {
            for (const auto& row : snap.rows) {
                if (!cond.token.empty() && row.token_id != cond.token &&
                    row.symbol != cond.token)
                    continue;
                if (cond.kind == TriggerCondition::Kind::PriceAbove
                        ? row.price_e18 >= cond.price_e18
                        : row.price_e18 <= cond.price_e18)
                    return true;
            }
            return false;
        }
    }
    return false;
}

inline std::vector<StrategyView> build_strategy_views(World& w, VaultId vault_id,
                                                      const ConfigCommit& commit,
                                                      const MarketSnapshot& snap,
                                                      const PortfolioContext& portfolio,
                                                      Tick now) {
    auto& table = w.strategy_status[vault_id];
    if (table.config_version != commit.version) {
        table.config_version = commit.version;
        table.by_label.clear();
    }
    std::vector<StrategyView> views;
    for (const Strategy* s : active_strategies(commit, now)) {
        StrategyView v;
        v.label = s->label;
        v.text = s->text;
        v.priority = s->priority;
        v.expiry = s->expiry;
        v.directive = classify_directive(s->text);

        auto [it, fresh] = table.by_label.try_emplace(s->label, StrategyStatus::Pending);
        if (fresh && (v.directive.kind == DirectiveClass::Kind::Restriction ||
                      v.directive.kind == DirectiveClass::Kind::HoldRule))
            it->second = StrategyStatus::ActiveCompliant;
        // re-arm triggered directives against current state unless completed
        if (v.directive.kind == DirectiveClass::Kind::Triggered &&
            it->second != StrategyStatus::Completed && v.directive.condition) {
            it->second = trigger_condition_met(*v.directive.condition, snap, portfolio)
                             ? StrategyStatus::Triggered
                             : StrategyStatus::Pending;
        }
        v.status = it->second;
        views.push_back(std::move(v));
    }
    return views;
}

inline ConstraintContextInfo build_constraints(const World& w, const Vault& vault,
                                               const MarketSnapshot& snap, Tick now) {
    ConstraintContextInfo c;
    c.max_trade_bps = w.guard_cfg.max_trade_bps;
    c.slippage_bps = w.guard_cfg.slippage_bps;
    c.max_price_impact_bps = w.guard_cfg.max_price_impact_bps;
    c.max_positions = w.guard_cfg.max_positions;
    c.protocol_fee_bps = w.protocol_fee_bps;
    c.lp_fee_bps = w.lp_fee_bps;
    for (const auto& row : snap.rows) {
        auto pit = w.pools.find(row.token_id);
        if (pit == w.pools.end()) continue;
        TokenCapsInfo t;
        t.token_id = row.token_id;
        t.symbol = row.symbol;
        t.buy_cap_impact = max_buy_for_impact(pit->second, c.max_price_impact_bps);
        auto pos = vault.positions.find(row.token_id);
        t.has_position = pos != vault.positions.end();
        if (t.has_position) {
            auto sc = max_sell_for_impact(pit->second, c.max_price_impact_bps);
            t.sell_uncapped = !sc.has_value();
            if (sc) t.sell_cap_impact = *sc;
        }
        auto tit = w.tokens.find(row.token_id);
        CapResult nc = new_coin_buy_cap(tit->second.launched_at, now);
        t.newcoin_capped = !nc.uncapped;
        if (t.newcoin_capped) t.newcoin_cap = nc.cap;
        c.per_token.push_back(std::move(t));
    }
    return c;
}

inline ReapContextInfo build_reap_context(const World& w, const MarketSnapshot& snap) {
    ReapContextInfo r;
    if (!w.reap || w.graduated) return r;
    std::vector<std::pair<u128, std::string>> caps;
    for (const auto& row : snap.rows) caps.emplace_back(row.price_e18, row.symbol);
    if (caps.size() < 2) return r;
    r.scheduled = true;
    r.next_at = w.reap->next_at;
    std::sort(caps.begin(), caps.end());
    std::size_t k = std::min<std::size_t>(2, caps.size());
    for (std::size_t i = 0; i < k; ++i) r.source_candidates.push_back(caps[i].second);
    for (std::size_t i = 0; i < k; ++i)
        r.target_candidates.push_back(caps[caps.size() - 1 - i].second);
    return r;
}

inline LaunchContextInfo build_launch_context(const World& w, Tick now) {
    LaunchContextInfo l;
    for (const auto& spec : w.launches) {
        if (spec.at < now) continue;
        l.upcoming = true;
        l.at = spec.at;
        l.symbol = spec.symbol;
        break;
    }
    return l;
}

inline void complete_strategy_if_directive(World& w, VaultId vault_id, const ToolCall& call,
                                           StrategyStatus outcome) {
    if (call.strategy_label.empty()) return;
    auto& table = w.strategy_status[vault_id];
    auto it = table.by_label.find(call.strategy_label);
    if (it != table.by_label.end()) it->second = outcome;
}

inline void settle_swap(World& w, Vault& vault, const SwapQuote& quote, TraceRecord& record,
                        const ToolCall& call, Tick now) {
    Pool& pool = w.pools.at(quote.token_id);
    auto result = execute_swap(pool, quote);
    if (!result.ok()) throw std::logic_error("engine: settlement swap failed unexpectedly");
    i128 realized = apply_settlement(vault, quote, now);

    Settlement s;
    s.kind = Settlement::Kind::Settled;
    s.side = quote.side;
    s.eth_amount = quote.side == Side::Buy ? quote.eth_in : quote.eth_out;
    s.token_amount = quote.side == Side::Buy ? quote.token_out : quote.token_in;
    s.fee_protocol = quote.protocol_fee;
    s.fee_lp = quote.lp_fee;
    s.realized_pnl_wei = realized;
    record.settlement = s;

    w.history.append_trade({now, now * MS_PER_TICK, vault.vault_id, quote.token_id, quote.side,
                            s.eth_amount});
    complete_strategy_if_directive(w, vault.vault_id, call, StrategyStatus::Completed);
    push_memory(w, vault.vault_id,
                {now, quote.side == Side::Buy ? "buy_token" : "sell_token", quote.token_id,
                 call.fraction_ppm, "settled", call.note});
}

inline void finish_record(World& w, TraceRecord record) {
    auto res = w.trace.append(std::move(record));
    if (!res.ok()) throw std::logic_error("engine: trace append failed");
}

inline void invoke_vault(World& w, Vault& vault, const MarketSnapshot& snap,
                         const ReapContextInfo& reap_ctx, const LaunchContextInfo& launch_ctx,
                         Tick now, u64 extra_index) {
    const ConfigCommit* commit = nullptr;
    {
        auto r = w.mandates.at(vault.vault_id).read_latest(now);
        if (!r.ok()) return; // no mandate yet: vault is not invocable
        commit = *r;
    }

    PortfolioContext portfolio = portfolio_view(vault, snap, now);

    BriefInputs in;
    in.commit = commit;
    in.strategies = build_strategy_views(w, vault.vault_id, *commit, snap, portfolio, now);
    in.snapshot = &snap;
    in.portfolio = &portfolio;
    in.constraints = build_constraints(w, vault, snap, now);
    in.reap = reap_ctx;
    in.launch = launch_ctx;
    in.memory = memory_view(w, vault.vault_id);
    in.clock = {now, w.clock.unix_at(now)};

    auto compiled = compile_brief(w.tmpl, in);
    if (!compiled.ok()) throw std::logic_error("engine: brief compilation failed");
    const CompiledBrief& brief = *compiled;
    w.trace.archive_brief(brief.rendered.brief_hash, brief.rendered.text);

    TraceRecord record;
    record.invocation_id = w.trace.next_invocation_id() + w.pending_settlements.size();
    record.tick = now;
    record.vault_id = vault.vault_id;
    record.config_version = commit->version;
    record.brief_hash = brief.rendered.brief_hash;
    record.structured_digest = structured_brief_digest(brief.structured);
    record.template_variant_id = brief.rendered.template_variant_id;
    record.sliders = commit->sliders;
    record.portfolio_before = snapshot_portfolio(vault, snap);
    record.portfolio_after = record.portfolio_before;

    // decide
    const PolicySpec& spec = w.policies.at(vault.vault_id);
    std::string raw;
    if (spec.kind == PolicySpec::Kind::External) {
        std::optional<std::string> reply;
        if (w.adapters)
            reply = w.adapters->request(vault.vault_id, brief.rendered.text,
                                        structured_brief_to_json(brief.structured).dump());
        if (reply) {
            raw = *reply;
        } else {
            ToolCall t;
            t.action = ToolCall::Action::Observe;
            t.reason_tags = {ReasonTag::Timeout};
            t.note = "adapter timeout";
            raw = format_tool_call(t);
        }
    } else {
        RngStream rng = RngStream::derive(w.engine_cfg.seed, "policy", vault.vault_id, u64(now),
                                          extra_index);
        raw = probe_policy_decide(spec, brief.structured, rng, w.policy_params);
    }
    record.raw_response = raw;

    auto parsed = parse_tool_call(raw);
    if (!parsed.ok()) {
        record.parse_error = parsed.error();
        finish_record(w, std::move(record));
        return;
    }
    record.parsed = *parsed;
    record.reason_tags = parsed->reason_tags;

    Verdict verdict = validate(*parsed, vault, w.tokens, w.pools, w.guard_cfg, now);
    record.verdict = verdict;

    if (auto* rej = std::get_if<Rejected>(&verdict)) {
        if (!parsed->strategy_label.empty())
            complete_strategy_if_directive(w, vault.vault_id, *parsed, StrategyStatus::Blocked);
        push_memory(w, vault.vault_id,
                    {now, parsed->is_swap() ? (parsed->action == ToolCall::Action::Buy
                                                   ? "buy_token"
                                                   : "sell_token")
                                            : "record_observation",
                     parsed->token_id, parsed->fraction_ppm,
                     std::string("rejected:") + reject_code_name(rej->code), parsed->note});
        finish_record(w, std::move(record));
        return;
    }

    const Accepted& acc = std::get<Accepted>(verdict);
    if (!acc.is_swap) {
        push_memory(w, vault.vault_id,
                    {now, "record_observation", "", 0, "observed",
                     parsed->note.empty()
                         ? std::string(reason_tag_name(parsed->dominant_tag()))
                         : parsed->note});
        finish_record(w, std::move(record));
        return;
    }

    // settlement failure injection (uniform Bernoulli per accepted action)
    if (w.engine_cfg.settlement_failure_rate > 0.0) {
        RngStream frng = RngStream::derive(w.engine_cfg.seed, "fail", record.invocation_id);
        if (frng.next_u01() < w.engine_cfg.settlement_failure_rate) {
            record.settlement.kind = Settlement::Kind::Failed;
            record.settlement.failure_reason = "injected fault";
            push_memory(w, vault.vault_id,
                        {now, parsed->action == ToolCall::Action::Buy ? "buy_token" : "sell_token",
                         parsed->token_id, parsed->fraction_ppm, "failed", parsed->note});
            finish_record(w, std::move(record));
            return;
        }
    }

    if (w.engine_cfg.settlement_mode == EngineConfig::SettlementMode::Delayed) {
        PendingSettlement p;
        p.vault_id = vault.vault_id;
        p.record = std::move(record);
        p.verdict = acc;
        p.call = *parsed;
        w.pending_settlements.push_back(std::move(p));
        return;
    }

    settle_swap(w, vault, acc.quote, record, *parsed, now);
    record.portfolio_after = snapshot_portfolio(vault, snap);
    finish_record(w, std::move(record));
}

inline void resolve_pending_settlements(World& w, Tick now) {
    std::vector<PendingSettlement> pending;
    pending.swap(w.pending_settlements);
    std::stable_sort(pending.begin(), pending.end(),
                     [](const PendingSettlement& a, const PendingSettlement& b) {
                         return a.record.invocation_id < b.record.invocation_id;
                     });
    MarketSnapshot snap = build_snapshot(w.history, w.tokens, w.pools, count_holders(w.vaults),
                                         now, w.eth_usd_display);
    for (auto& p : pending) {
        Vault& vault = w.vaults.at(p.vault_id);
        auto pit = w.pools.find(p.call.token_id);
        if (pit == w.pools.end()) {
            p.record.settlement.kind = Settlement::Kind::Failed;
            p.record.settlement.failure_reason = "SlippageExceeded: pool delisted before settlement";
            finish_record(w, std::move(p.record));
            continue;
        }
        auto fresh = settlement_check(p.verdict, pit->second);
        if (!fresh.ok()) {
            p.record.settlement.kind = Settlement::Kind::Failed;
            p.record.settlement.failure_reason = "SlippageExceeded: " + fresh.error().detail;
            push_memory(w, p.vault_id,
                        {p.record.tick,
                         p.call.action == ToolCall::Action::Buy ? "buy_token" : "sell_token",
                         p.call.token_id, p.call.fraction_ppm, "failed", p.call.note});
            finish_record(w, std::move(p.record));
            continue;
        }
        // guard-guaranteed bounds can drift between ticks in delayed mode
        bool feasible = fresh->side == Side::Buy
                            ? fresh->eth_in <= vault.eth_balance
                            : vault.positions.count(fresh->token_id) &&
                                  fresh->token_in <= vault.positions.at(fresh->token_id).balance;
        if (!feasible) {
            p.record.settlement.kind = Settlement::Kind::Failed;
            p.record.settlement.failure_reason = "SlippageExceeded: balance changed before settlement";
            finish_record(w, std::move(p.record));
            continue;
        }
        settle_swap(w, vault, *fresh, p.record, p.call, now);
        p.record.portfolio_after = snapshot_portfolio(vault, snap);
        finish_record(w, std::move(p.record));
    }
}

inline void process_launches(World& w, Tick now) {
    for (const auto& spec : w.launches) {
        if (spec.at != now) continue;
        TokenMeta m;
        m.token_id = spec.token_id;
        m.symbol = spec.symbol;
        m.launched_at = now;
        w.tokens[spec.token_id] = m;
        Pool p;
        p.token_id = spec.token_id;
        p.eth_reserve = spec.eth_seed;
        p.token_reserve = spec.token_seed;
        p.lp_fee_bps = w.lp_fee_bps;
        p.protocol_fee_bps = w.protocol_fee_bps;
        w.pools[spec.token_id] = p;
        w.treasury[spec.token_id] = m.total_supply - spec.token_seed;
        w.external_eth_wei += i128(spec.eth_seed.raw); // seeded liquidity enters the ledger
        w.history.record_genesis(spec.token_id, now, p.spot_price_e18());
    }
}

inline std::vector<VaultId> invocation_order(const World& w, Tick now) {
    std::vector<VaultId> order;
    for (const auto& [vid, v] : w.vaults) order.push_back(vid);
    if (w.engine_cfg.decision_shuffle) {
        RngStream rng = RngStream::derive(w.engine_cfg.seed, "shuffle", u64(now));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.next_below(i)]);
    }
    return order;
}

// 0-3 extra invocations per simulated hour when jitter is on; offsets are a
// seeded partial shuffle of the hour's twelve ticks.
inline u64 jitter_extras(const World& w, VaultId vault_id, Tick now) {
    if (!w.engine_cfg.invocation_jitter) return 0;
    Tick hour = now / 12;
    RngStream rng = RngStream::derive(w.engine_cfg.seed, "jitter", vault_id, u64(hour));
    u64 k = rng.next_below(4);
    u64 offsets[12] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
    for (u64 i = 0; i < k; ++i) std::swap(offsets[i], offsets[i + rng.next_below(12 - i)]);
    u64 slot = u64(now % 12);
    for (u64 i = 0; i < k; ++i)
        if (offsets[i] == slot) return 1;
    return 0;
}

} // namespace engine_detail

inline void apply_scheduled_inputs(World& w, Tick now) {
    for (const auto& c : w.scheduled_commits) {
        if (c.at != now) continue;
        auto r = w.mandates[c.vault_id].commit_config(c.sliders, c.strategies, now);
        if (!r.ok())
            throw std::invalid_argument(std::string("scheduled commit invalid: ") +
                                        mandate_error_name(r.error()));
        w.trace.append_owner({now, c.vault_id, "commit_config",
                              "version " + std::to_string(*r)});
    }
    for (const auto& a : w.scheduled_owner_actions) {
        if (a.at != now) continue;
        Vault& v = w.vaults.at(a.vault_id);
        Eth eth_before = v.eth_balance;
        auto r = apply_owner_action(v, a.issuer, a.action, w.pools, now);
        std::string kind, detail;
        if (std::holds_alternative<FundAction>(a.action)) {
            kind = "fund";
            if (r.ok()) w.external_eth_wei += i128((v.eth_balance - eth_before).raw);
        } else if (std::holds_alternative<WithdrawAction>(a.action)) {
            kind = "withdraw";
            if (r.ok()) w.external_eth_wei -= i128((eth_before - v.eth_balance).raw);
        } else if (std::holds_alternative<PauseAction>(a.action)) kind = "pause";
        else if (std::holds_alternative<UnpauseAction>(a.action)) kind = "unpause";
        else if (std::holds_alternative<CloseAction>(a.action)) kind = "close";
        else if (std::holds_alternative<EmergencyLiquidateAction>(a.action)) {
            kind = "emergency_liquidate";
            if (r.ok())
                for (const auto& liq : r->liquidations)
                    w.history.append_trade({now, now * MS_PER_TICK, a.vault_id,
                                            liq.quote.token_id, Side::Sell, liq.quote.eth_out});
        } else kind = "config_update";
        detail = r.ok() ? "ok" : owner_action_error_name(r.error());
        w.trace.append_owner({now, a.vault_id, kind, detail});
    }
}

inline void run_tick(World& w) {
    const Tick now = w.clock.tick;

    apply_scheduled_inputs(w, now);
    if (w.engine_cfg.settlement_mode == EngineConfig::SettlementMode::Delayed)
        engine_detail::resolve_pending_settlements(w, now);

    MarketSnapshot snap = build_snapshot(w.history, w.tokens, w.pools, count_holders(w.vaults),
                                         now, w.eth_usd_display);
    ReapContextInfo reap_ctx = engine_detail::build_reap_context(w, snap);
    LaunchContextInfo launch_ctx = engine_detail::build_launch_context(w, now);

    for (VaultId vid : engine_detail::invocation_order(w, now)) {
        Vault& v = w.vaults.at(vid);
        if (v.paused || v.closed || v.activated_at > now || !v.has_capital()) continue;
        engine_detail::invoke_vault(w, v, snap, reap_ctx, launch_ctx, now, 0);
        if (engine_detail::jitter_extras(w, vid, now) > 0 && !v.paused && !v.closed)
            engine_detail::invoke_vault(w, v, snap, reap_ctx, launch_ctx, now, 1);
    }

    engine_detail::process_launches(w, now);

    if (w.reap && !w.graduated && w.reap->next_at == now) {
        MarketSnapshot fresh = build_snapshot(w.history, w.tokens, w.pools,
                                              count_holders(w.vaults), now, w.eth_usd_display);
        auto pair = select_reap_pair(fresh, w.tokens);
        if (pair.ok()) {
            ReapEvent ev = execute_reap(w.tokens, w.pools, w.vaults, w.protocol_dust,
                                        w.protocol_eth_collected, *pair, now);
            w.trace.append_reap(ev);
            ++w.reap_count;
            w.reap->next_at += w.reap->period;
        } else {
            w.graduated = true; // last token standing
        }
    }

    for (const auto& [id, pool] : w.pools)
        if (!pool.delisted) w.history.record_price(id, now, pool.spot_price_e18());

    if (w.engine_cfg.debug_checks) {
        ConservationReport r = check_conservation(w);
        if (!r.ok) throw std::logic_error("conservation check failed: " + r.detail);
    }

    w.clock.tick += 1;
}

inline void run(World& w, Tick n_ticks) {
    for (Tick i = 0; i < n_ticks; ++i) run_tick(w);
    if (!w.pending_settlements.empty())
        engine_detail::resolve_pending_settlements(w, w.clock.tick);
}

} // namespace vaultsim
