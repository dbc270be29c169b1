// Diagnostic metrics over trace exports: cold-start ratios, slider gradients,
// deployment, fee salience, sell cascades and two-sided windows. Every metric
// is recomputable from an export plus its manifest; nothing here reads live
// engine state.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vaultsim/expected.hpp"
#include "vaultsim/trace.hpp"

namespace vaultsim {

inline constexpr i64 CASCADE_WINDOW_MS = 10 * 60 * 1000; // 10 minutes
inline constexpr i64 TWO_SIDED_WINDOW_MS = 5 * 60 * 1000;

struct TradeEvent {
    i64 time_ms = 0;
    VaultId vault_id = 0;
    TokenId token_id;
    Side side = Side::Buy;
    Eth eth;
};

// Settled swaps only, in stream order (time-ordered by construction).
inline std::vector<TradeEvent> trades_from_trace(const TraceStore& store) {
    std::vector<TradeEvent> out;
    for (const auto& e : store.events()) {
        auto* r = std::get_if<TraceRecord>(&e);
        if (!r || r->settlement.kind != Settlement::Kind::Settled) continue;
        out.push_back({r->tick * MS_PER_TICK, r->vault_id, r->parsed->token_id,
                       r->settlement.side, r->settlement.eth_amount});
    }
    return out;
}

// --- cold start ---------------------------------------------------------------

struct ColdStartReport {
    u64 buys = 0;
    u64 sells = 0;
    std::optional<double> ratio; // absent when sells == 0 (sentinel, not infinity)
};

inline ColdStartReport cold_start_buy_sell(const TraceStore& store, VaultId vault,
                                           std::size_t window = 30) {
    ColdStartReport rep;
    auto records = store.records_for_vault(vault);
    std::size_t n = std::min(records.size(), window);
    for (std::size_t i = 0; i < n; ++i) {
        const TraceRecord* r = records[i];
        if (!r->parsed) continue;
        if (r->parsed->action == ToolCall::Action::Buy) ++rep.buys;
        if (r->parsed->action == ToolCall::Action::Sell) ++rep.sells;
    }
    if (rep.sells > 0) rep.ratio = double(rep.buys) / double(rep.sells);
    return rep;
}

// --- slider gradients ----------------------------------------------------------

enum class SliderMetric { TradeRate, SpendFraction, RiskIndex, HoldTicks, PositionCount };

inline std::optional<SliderName> slider_from_name(std::string_view n) {
    for (SliderName s : {SliderName::TA, SliderName::ARP, SliderName::TS, SliderName::HS,
                         SliderName::DIV})
        if (n == slider_short_name(s)) return s;
    return std::nullopt;
}

// Per-level accumulators, mergeable across sweep samples.
struct LevelAccum {
    u64 invocations = 0;
    u64 settled_trades = 0;
    u64 settled_buys = 0;
    double spend_fraction_sum = 0; // over settled buys
    double hold_ticks_sum = 0;     // buy->sell spans
    u64 hold_samples = 0;
    double age_percentile_sum = 0; // of bought tokens at buy time
    u64 age_samples = 0;
    double position_count_sum = 0; // per record, after settlement
    u64 samples = 0;               // contributing vault-runs

    void merge(const LevelAccum& o) {
        invocations += o.invocations;
        settled_trades += o.settled_trades;
        settled_buys += o.settled_buys;
        spend_fraction_sum += o.spend_fraction_sum;
        hold_ticks_sum += o.hold_ticks_sum;
        hold_samples += o.hold_samples;
        age_percentile_sum += o.age_percentile_sum;
        age_samples += o.age_samples;
        position_count_sum += o.position_count_sum;
        samples += o.samples;
    }

    double trade_rate() const {
        return invocations ? double(settled_trades) / double(invocations) : 0.0;
    }
    double mean_spend_fraction() const {
        return settled_buys ? spend_fraction_sum / double(settled_buys) : 0.0;
    }
    double mean_hold_ticks() const {
        return hold_samples ? hold_ticks_sum / double(hold_samples) : 0.0;
    }
    // higher = younger tokens bought = riskier selection
    double risk_index() const {
        return age_samples ? 1.0 - age_percentile_sum / double(age_samples) : 0.0;
    }
    double mean_position_count() const {
        return invocations ? position_count_sum / double(invocations) : 0.0;
    }
    double metric(SliderMetric m) const {
        switch (m) {
            case SliderMetric::TradeRate: return trade_rate();
            case SliderMetric::SpendFraction: return mean_spend_fraction();
            case SliderMetric::RiskIndex: return risk_index();
            case SliderMetric::HoldTicks: return mean_hold_ticks();
            case SliderMetric::PositionCount: return mean_position_count();
        }
        return 0.0;
    }
};

inline SliderMetric primary_metric_for(SliderName s) {
    switch (s) {
        case SliderName::TA: return SliderMetric::TradeRate;
        case SliderName::TS: return SliderMetric::SpendFraction;
        case SliderName::ARP: return SliderMetric::RiskIndex;
        case SliderName::HS: return SliderMetric::HoldTicks;
        case SliderName::DIV: return SliderMetric::PositionCount;
    }
    return SliderMetric::TradeRate;
}

enum class GradientVerdict { StrictlyMonotone, Inverted, Flat };

inline const char* gradient_verdict_name(GradientVerdict v) {
    switch (v) {
        case GradientVerdict::StrictlyMonotone: return "strictly-monotone";
        case GradientVerdict::Inverted: return "inverted";
        case GradientVerdict::Flat: return "flat";
    }
    return "?";
}

struct GradientReport {
    SliderName slider = SliderName::TA;
    std::map<int, LevelAccum> levels;
    GradientVerdict verdict = GradientVerdict::Flat;
};

enum class AnalyticsError { InsufficientCohorts, UnknownMetric, NoSuchRecord };

inline const char* analytics_error_name(AnalyticsError e) {
    switch (e) {
        case AnalyticsError::InsufficientCohorts: return "InsufficientCohorts";
        case AnalyticsError::UnknownMetric: return "UnknownMetric";
        case AnalyticsError::NoSuchRecord: return "NoSuchRecord";
    }
    return "?";
}

// Token launch ticks from the manifest scenario; reap delistings from the
// trace itself. Needed for the launch-age percentile behind the risk index.
struct TokenTimeline {
    std::map<TokenId, Tick> launched_at;
    std::map<TokenId, Tick> delisted_at;

    static TokenTimeline from(const Json& scenario, const TraceStore& store) {
        TokenTimeline t;
        if (scenario.contains("tokens"))
            for (const auto& tok : scenario["tokens"])
                t.launched_at[tok.at("symbol").get<std::string>()] =
                    tok.value("launch_tick", Tick(0));
        for (const auto& e : store.events())
            if (auto* r = std::get_if<ReapEvent>(&e)) t.delisted_at[r->eliminated_token] = r->tick;
        return t;
    }

    // Percentile (0..1) of this token's age among tokens live at `tick`.
    std::optional<double> age_percentile(const TokenId& token, Tick tick) const {
        auto it = launched_at.find(token);
        if (it == launched_at.end()) return std::nullopt;
        Tick age = tick - it->second;
        u64 younger = 0, live = 0;
        for (const auto& [id, launch] : launched_at) {
            if (launch > tick) continue;
            auto d = delisted_at.find(id);
            if (d != delisted_at.end() && d->second < tick) continue;
            ++live;
            if (tick - launch < age) ++younger;
        }
        if (live <= 1) return 0.5;
        return double(younger) / double(live - 1);
    }
};

// Accumulates one trace into per-(level) stats for the given slider,
// optionally restricted to a cohort of vaults.
inline std::map<int, LevelAccum> accumulate_gradient(
    const TraceStore& store, const TokenTimeline& timeline, SliderName slider,
    const std::optional<std::set<VaultId>>& cohort = std::nullopt) {
    std::map<int, LevelAccum> by_level;
    std::map<VaultId, std::map<TokenId, Tick>> last_buy_tick;
    std::set<std::pair<int, VaultId>> seen;

    for (const auto& e : store.events()) {
        auto* r = std::get_if<TraceRecord>(&e);
        if (!r) continue;
        if (cohort && !cohort->count(r->vault_id)) continue;
        int level = slider_value(r->sliders, slider);
        LevelAccum& acc = by_level[level];
        ++acc.invocations;
        if (seen.insert({level, r->vault_id}).second) ++acc.samples;
        acc.position_count_sum += double(r->portfolio_after.positions.size());

        if (r->settlement.kind != Settlement::Kind::Settled) continue;
        ++acc.settled_trades;
        const TokenId& token = r->parsed->token_id;
        if (r->settlement.side == Side::Buy) {
            ++acc.settled_buys;
            acc.spend_fraction_sum += double(r->parsed->fraction_ppm) / 1e6;
            if (auto pct = timeline.age_percentile(token, r->tick)) {
                acc.age_percentile_sum += *pct;
                ++acc.age_samples;
            }
            last_buy_tick[r->vault_id][token] = r->tick;
        } else {
            auto vit = last_buy_tick.find(r->vault_id);
            if (vit != last_buy_tick.end()) {
                auto tit = vit->second.find(token);
                if (tit != vit->second.end()) {
                    acc.hold_ticks_sum += double(r->tick - tit->second);
                    ++acc.hold_samples;
                }
            }
        }
    }
    return by_level;
}

inline GradientVerdict gradient_verdict(const std::map<int, LevelAccum>& levels,
                                        SliderMetric metric, double eps = 1e-12) {
    std::vector<double> vals;
    for (const auto& [lvl, acc] : levels) vals.push_back(acc.metric(metric));
    bool any_down = false, all_up = true;
    for (std::size_t i = 1; i < vals.size(); ++i) {
        if (vals[i] < vals[i - 1] - eps) any_down = true;
        if (vals[i] <= vals[i - 1] + eps) all_up = false;
    }
    if (any_down) return GradientVerdict::Inverted;
    return all_up ? GradientVerdict::StrictlyMonotone : GradientVerdict::Flat;
}

inline Expected<GradientReport, AnalyticsError> slider_gradient_report(
    const TraceStore& store, const Json& scenario, SliderName slider,
    const std::optional<std::set<VaultId>>& cohort = std::nullopt) {
    GradientReport rep;
    rep.slider = slider;
    rep.levels = accumulate_gradient(store, TokenTimeline::from(scenario, store), slider, cohort);
    if (rep.levels.size() < 2) return AnalyticsError::InsufficientCohorts;
    rep.verdict = gradient_verdict(rep.levels, primary_metric_for(slider));
    return rep;
}

// --- deployment and fee salience ------------------------------------------------

inline Expected<double, AnalyticsError> deployment_fraction(const TraceStore& store,
                                                            VaultId vault, Tick at) {
    const TraceRecord* found = nullptr;
    for (const TraceRecord* r : store.records_for_vault(vault))
        if (r->tick == at) found = r;
    if (!found) return AnalyticsError::NoSuchRecord;
    const PortfolioSnapshot& p = found->portfolio_after;
    u128 token_value = 0;
    for (const auto& pos : p.positions) token_value += muldiv(pos.balance.raw, pos.spot_e18, QUANTA);
    u128 total = token_value + p.eth_balance.raw;
    if (total == 0) return 0.0;
    return double(muldiv(token_value, 1'000'000'000, total)) / 1e9;
}

// Share of observation records whose dominant reason tag is fee_cost: a
// salience proxy, not a 100% target. Absent when the cohort never observed.
inline std::optional<double> fee_salience_rate(
    const TraceStore& store, const std::optional<std::set<VaultId>>& cohort = std::nullopt) {
    u64 observes = 0, fee_led = 0;
    for (const auto& e : store.events()) {
        auto* r = std::get_if<TraceRecord>(&e);
        if (!r || !r->parsed || r->parsed->action != ToolCall::Action::Observe) continue;
        if (cohort && !cohort->count(r->vault_id)) continue;
        ++observes;
        if (r->parsed->dominant_tag() == ReasonTag::FeeCost) ++fee_led;
    }
    if (observes == 0) return std::nullopt;
    return double(fee_led) / double(observes);
}

// --- cascades -------------------------------------------------------------------

struct CascadeEvent {
    TokenId token_id;
    i64 start_ms = 0;
    i64 end_ms = 0;
    u64 vault_count = 0;
    u64 sell_count = 0;
    double median_gap_ms = 0; // over consecutive distinct-vault sells
};

// Maximal merged windows per token in which at least `k` distinct vaults sold
// within any sliding window of `window_ms`. Overlapping qualifying windows
// merge into one event.
inline std::vector<CascadeEvent> detect_sell_cascades(const std::vector<TradeEvent>& trades,
                                                      u64 k = 10,
                                                      i64 window_ms = CASCADE_WINDOW_MS) {
    std::map<TokenId, std::vector<const TradeEvent*>> sells;
    for (const auto& t : trades)
        if (t.side == Side::Sell) sells[t.token_id].push_back(&t);

    std::vector<CascadeEvent> events;
    for (auto& [token, v] : sells) {
        std::stable_sort(v.begin(), v.end(), [](const TradeEvent* a, const TradeEvent* b) {
            return a->time_ms < b->time_ms;
        });
        // two-pointer sweep over qualifying half-open windows [t_i, t_i + w)
        std::vector<std::pair<i64, i64>> qualifying;
        std::size_t j = 0;
        std::map<VaultId, u64> in_window; // distinct-vault counts within [i, j)
        for (std::size_t i = 0; i < v.size(); ++i) {
            while (j < v.size() && v[j]->time_ms < v[i]->time_ms + window_ms)
                ++in_window[v[j++]->vault_id];
            if (in_window.size() >= k)
                qualifying.push_back({v[i]->time_ms, v[i]->time_ms + window_ms});
            auto it = in_window.find(v[i]->vault_id);
            if (--it->second == 0) in_window.erase(it);
        }
        // merge overlaps
        std::vector<std::pair<i64, i64>> merged;
        for (const auto& q : qualifying) {
            if (!merged.empty() && q.first <= merged.back().second)
                merged.back().second = std::max(merged.back().second, q.second);
            else
                merged.push_back(q);
        }
        for (const auto& m : merged) {
            CascadeEvent ev;
            ev.token_id = token;
            std::set<VaultId> vaults;
            std::vector<const TradeEvent*> in;
            for (const TradeEvent* t : v)
                if (t->time_ms >= m.first && t->time_ms < m.second) {
                    in.push_back(t);
                    vaults.insert(t->vault_id);
                }
            if (in.empty()) continue;
            ev.start_ms = in.front()->time_ms;
            ev.end_ms = in.back()->time_ms;
            ev.vault_count = vaults.size();
            ev.sell_count = in.size();
            std::vector<i64> gaps;
            for (std::size_t i = 1; i < in.size(); ++i)
                if (in[i]->vault_id != in[i - 1]->vault_id)
                    gaps.push_back(in[i]->time_ms - in[i - 1]->time_ms);
            if (!gaps.empty()) {
                std::sort(gaps.begin(), gaps.end());
                std::size_t mid = gaps.size() / 2;
                ev.median_gap_ms = gaps.size() % 2 ? double(gaps[mid])
                                                   : (double(gaps[mid - 1]) + double(gaps[mid])) / 2;
            }
            events.push_back(std::move(ev));
        }
    }
    std::stable_sort(events.begin(), events.end(), [](const CascadeEvent& a, const CascadeEvent& b) {
        return a.start_ms != b.start_ms ? a.start_ms < b.start_ms : a.token_id < b.token_id;
    });
    return events;
}

// --- two-sided windows -----------------------------------------------------------

// Consecutive five-minute token-windows tiled from the epoch; a window is
// two-sided iff it contains at least one buy and one sell of that token.
// Returns trades inside two-sided windows / all trades (0 when empty).
inline double two_sided_fraction(const std::vector<TradeEvent>& trades,
                                 i64 window_ms = TWO_SIDED_WINDOW_MS, bool rolling = false) {
    if (trades.empty()) return 0.0;
    if (!rolling) {
        std::map<std::pair<TokenId, i64>, std::pair<bool, bool>> windows; // buy, sell
        for (const auto& t : trades) {
            auto& w = windows[{t.token_id, t.time_ms / window_ms}];
            (t.side == Side::Buy ? w.first : w.second) = true;
        }
        u64 inside = 0;
        for (const auto& t : trades) {
            const auto& w = windows.at({t.token_id, t.time_ms / window_ms});
            if (w.first && w.second) ++inside;
        }
        return double(inside) / double(trades.size());
    }
    // rolling option: a trade counts when any window [s, s+w) anchored at a
    // trade of the same token contains both sides and covers it
    u64 inside = 0;
    std::map<TokenId, std::vector<const TradeEvent*>> by_token;
    for (const auto& t : trades) by_token[t.token_id].push_back(&t);
    for (auto& [token, v] : by_token) {
        std::stable_sort(v.begin(), v.end(), [](const TradeEvent* a, const TradeEvent* b) {
            return a->time_ms < b->time_ms;
        });
        for (std::size_t i = 0; i < v.size(); ++i) {
            bool counted = false;
            for (std::size_t s = 0; s < v.size() && !counted; ++s) {
                i64 start = v[s]->time_ms;
                if (start > v[i]->time_ms) break;
                if (v[i]->time_ms >= start + window_ms) continue;
                bool buy = false, sellside = false;
                for (const TradeEvent* t : v) {
                    if (t->time_ms < start) continue;
                    if (t->time_ms >= start + window_ms) break;
                    (t->side == Side::Buy ? buy : sellside) = true;
                }
                counted = buy && sellside;
            }
            if (counted) ++inside;
        }
    }
    return double(inside) / double(trades.size());
}

// --- cooldown scan ----------------------------------------------------------------

struct CooldownViolation {
    VaultId vault_id = 0;
    TokenId token_id;
    Tick first_tick = 0;
    Tick second_tick = 0;
    std::string kind; // buy->buy, sell->sell, sell->rebuy
};

// Full-trace scan of same-token transitions against the 8/4/4 table. Labeled
// strategy executions are the HIGH exception.
inline std::vector<CooldownViolation> scan_cooldown_violations(const TraceStore& store,
                                                               Tick sell_rebuy = 8,
                                                               Tick buy_buy = 4,
                                                               Tick sell_sell = 4) {
    struct Last {
        std::optional<Tick> buy, sell;
    };
    std::map<VaultId, std::map<TokenId, Last>> state;
    std::vector<CooldownViolation> out;
    for (const auto& e : store.events()) {
        auto* r = std::get_if<TraceRecord>(&e);
        if (!r || r->settlement.kind != Settlement::Kind::Settled) continue;
        const TokenId& token = r->parsed->token_id;
        Last& last = state[r->vault_id][token];
        bool high_exception = !r->parsed->strategy_label.empty();
        if (r->settlement.side == Side::Buy) {
            if (!high_exception) {
                if (last.buy && r->tick - *last.buy < buy_buy)
                    out.push_back({r->vault_id, token, *last.buy, r->tick, "buy->buy"});
                if (last.sell && r->tick - *last.sell < sell_rebuy)
                    out.push_back({r->vault_id, token, *last.sell, r->tick, "sell->rebuy"});
            }
            last.buy = r->tick;
        } else {
            if (!high_exception && last.sell && r->tick - *last.sell < sell_sell)
                out.push_back({r->vault_id, token, *last.sell, r->tick, "sell->sell"});
            last.sell = r->tick;
        }
    }
    return out;
}

// --- CSV rendering -----------------------------------------------------------------

namespace csv {

inline std::string fixed6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::string gradient(const GradientReport& rep) {
    std::string out =
        "slider,level,samples,invocations,trades,trade_rate,mean_spend_fraction,"
        "risk_index,mean_hold_ticks,mean_position_count\n";
    for (const auto& [lvl, acc] : rep.levels) {
        out += slider_short_name(rep.slider);
        out += ',' + std::to_string(lvl);
        out += ',' + std::to_string(acc.samples);
        out += ',' + std::to_string(acc.invocations);
        out += ',' + std::to_string(acc.settled_trades);
        out += ',' + fixed6(acc.trade_rate());
        out += ',' + fixed6(acc.mean_spend_fraction());
        out += ',' + fixed6(acc.risk_index());
        out += ',' + fixed6(acc.mean_hold_ticks());
        out += ',' + fixed6(acc.mean_position_count());
        out += '\n';
    }
    out += std::string("# verdict: ") + gradient_verdict_name(rep.verdict) + "\n";
    return out;
}

inline std::string cascades(const std::vector<CascadeEvent>& evs) {
    std::string out = "token,start_ms,end_ms,vaults,sells,median_gap_s\n";
    for (const auto& e : evs) {
        out += e.token_id;
        out += ',' + std::to_string(e.start_ms);
        out += ',' + std::to_string(e.end_ms);
        out += ',' + std::to_string(e.vault_count);
        out += ',' + std::to_string(e.sell_count);
        out += ',' + fixed6(e.median_gap_ms / 1000.0);
        out += '\n';
    }
    return out;
}

inline std::string taxonomy(const FailureTaxonomy& t) {
    std::string out = "bucket,count\n";
    out += "parse_errors," + std::to_string(t.parse_errors) + "\n";
    for (const auto& [code, n] : t.guard_rejections)
        out += "rejected:" + code + "," + std::to_string(n) + "\n";
    out += "settlement_failures," + std::to_string(t.settlement_failures) + "\n";
    out += "settled," + std::to_string(t.settled) + "\n";
    out += "observes," + std::to_string(t.observes) + "\n";
    out += "# settlement_success_rate," + fixed6(t.settlement_success_rate()) + "\n";
    return out;
}

} // namespace csv

} // namespace vaultsim
