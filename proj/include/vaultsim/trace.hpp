// Append-only instruction-to-settlement store with export, import and
// integrity checks. One stream event per invocation (plus reap and owner
// events), briefs deduplicated by hash in a side archive, and a manifest line
// carrying seed, scenario and counts so any export replays exactly.
#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vaultsim/guard.hpp"
#include "vaultsim/reap.hpp"
#include "vaultsim/serde.hpp"
#include "vaultsim/toolcall.hpp"

namespace vaultsim {

inline constexpr const char* TRACE_FORMAT_ID = "vaultsim-trace-v1";

struct PortfolioSnapshot {
    Eth eth_balance;
    struct Entry {
        TokenId token_id;
        TokenUnits balance;
        u128 avg_entry_e18 = 0;
        u128 spot_e18 = 0; // decision-time spot, keeps deployment recomputable
        bool operator==(const Entry&) const = default;
    };
    std::vector<Entry> positions; // token-id order

    bool operator==(const PortfolioSnapshot&) const = default;
};

inline PortfolioSnapshot snapshot_portfolio(const Vault& vault, const MarketSnapshot& snap) {
    PortfolioSnapshot s;
    s.eth_balance = vault.eth_balance;
    for (const auto& [id, pos] : vault.positions) {
        const TokenStats* row = snap.find(id);
        s.positions.push_back(
            {id, pos.balance, pos.avg_entry_price_e18(), row ? row->price_e18 : 0});
    }
    return s;
}

struct Settlement {
    enum class Kind { Settled, Failed, NotApplicable };
    Kind kind = Kind::NotApplicable;
    // settled
    Side side = Side::Buy;
    Eth eth_amount;          // ETH leg (in for buys, out for sells)
    TokenUnits token_amount; // token leg
    Eth fee_protocol;
    Eth fee_lp;
    i128 realized_pnl_wei = 0;
    // failed
    std::string failure_reason;

    bool operator==(const Settlement&) const = default;
};

struct TraceRecord {
    u64 invocation_id = 0; // monotone across the whole run
    Tick tick = 0;
    VaultId vault_id = 0;
    u64 config_version = 0;
    std::string brief_hash;
    std::string structured_digest;
    std::string template_variant_id;
    SliderConfig sliders;
    std::string raw_response;
    std::optional<ToolCall> parsed;
    std::optional<ParseError> parse_error;
    std::optional<Verdict> verdict; // absent on parse failure
    Settlement settlement;
    PortfolioSnapshot portfolio_before;
    PortfolioSnapshot portfolio_after;
    std::vector<ReasonTag> reason_tags;
};

struct OwnerEvent {
    Tick tick = 0;
    VaultId vault_id = 0;
    std::string kind; // fund/withdraw/pause/unpause/close/emergency_liquidate/commit_config
    std::string detail;
};

using StreamEvent = std::variant<TraceRecord, ReapEvent, OwnerEvent>;

enum class TraceAppendError { DanglingBriefHash, NonMonotoneId };

struct TraceManifest {
    u64 seed = 0;
    std::string scenario_sha256;
    Json scenario; // resolved scenario, template text embedded
    std::string template_variant;
};

class TraceStore {
public:
    enum class ArchiveMode { Full, HashesOnly };

    explicit TraceStore(ArchiveMode mode = ArchiveMode::Full) : mode_(mode) {}

    ArchiveMode archive_mode() const { return mode_; }

    void archive_brief(const std::string& hash, const std::string& text) {
        auto it = archive_.find(hash);
        if (it == archive_.end())
            archive_.emplace(hash, mode_ == ArchiveMode::Full ? text : std::string{});
    }

    Expected<u64, TraceAppendError> append(TraceRecord record) {
        if (!archive_.count(record.brief_hash)) return TraceAppendError::DanglingBriefHash;
        if (record.invocation_id <= last_id_ && !(last_id_ == 0 && record.invocation_id == 0))
            return TraceAppendError::NonMonotoneId;
        last_id_ = record.invocation_id;
        by_vault_[record.vault_id].push_back(events_.size());
        by_tick_[record.tick].push_back(events_.size());
        ++record_count_;
        events_.emplace_back(std::move(record));
        return last_id_;
    }

    void append_reap(ReapEvent ev) { events_.emplace_back(std::move(ev)); }
    void append_owner(OwnerEvent ev) { events_.emplace_back(std::move(ev)); }

    const std::vector<StreamEvent>& events() const { return events_; }
    u64 record_count() const { return record_count_; }
    u64 next_invocation_id() const { return last_id_ + 1; }

    const std::map<std::string, std::string>& brief_archive() const { return archive_; }

    std::vector<const TraceRecord*> records() const {
        std::vector<const TraceRecord*> out;
        out.reserve(record_count_);
        for (const auto& e : events_)
            if (auto* r = std::get_if<TraceRecord>(&e)) out.push_back(r);
        return out;
    }

    std::vector<const TraceRecord*> records_for_vault(VaultId v) const {
        std::vector<const TraceRecord*> out;
        auto it = by_vault_.find(v);
        if (it == by_vault_.end()) return out;
        for (std::size_t idx : it->second) out.push_back(&std::get<TraceRecord>(events_[idx]));
        return out;
    }

    std::vector<const TraceRecord*> records_at_tick(Tick t) const {
        std::vector<const TraceRecord*> out;
        auto it = by_tick_.find(t);
        if (it == by_tick_.end()) return out;
        for (std::size_t idx : it->second) out.push_back(&std::get<TraceRecord>(events_[idx]));
        return out;
    }

    std::vector<VaultId> vault_ids() const {
        std::vector<VaultId> out;
        for (const auto& [v, idx] : by_vault_) out.push_back(v);
        return out;
    }

private:
    ArchiveMode mode_;
    std::vector<StreamEvent> events_;
    std::map<std::string, std::string> archive_;
    std::map<VaultId, std::vector<std::size_t>> by_vault_;
    std::map<Tick, std::vector<std::size_t>> by_tick_;
    u64 last_id_ = 0;
    u64 record_count_ = 0;
};

// --- serialization -----------------------------------------------------------

namespace trace_serde {

inline Json to_json(const PortfolioSnapshot& s) {
    Json positions = Json::array();
    for (const auto& p : s.positions)
        positions.push_back(Json{{"token", p.token_id},
                                 {"balance", u128_to_string(p.balance.raw)},
                                 {"entry_e18", u128_to_string(p.avg_entry_e18)},
                                 {"spot_e18", u128_to_string(p.spot_e18)}});
    return Json{{"eth", u128_to_string(s.eth_balance.raw)}, {"positions", positions}};
}

inline PortfolioSnapshot portfolio_from_json(const Json& j) {
    PortfolioSnapshot s;
    s.eth_balance = Eth(u128_from_string(j.at("eth").get<std::string>()));
    for (const auto& p : j.at("positions")) {
        s.positions.push_back({p.at("token").get<std::string>(),
                               TokenUnits(u128_from_string(p.at("balance").get<std::string>())),
                               u128_from_string(p.at("entry_e18").get<std::string>()),
                               u128_from_string(p.at("spot_e18").get<std::string>())});
    }
    return s;
}

inline Json to_json(const ToolCall& c) {
    Json j{{"action", action_name(c.action)}};
    if (c.is_swap()) {
        j["token"] = c.token_id;
        j["fraction_ppm"] = c.fraction_ppm;
    }
    if (!c.strategy_label.empty()) j["strategy"] = c.strategy_label;
    if (!c.reason_tags.empty()) {
        Json tags = Json::array();
        for (ReasonTag t : c.reason_tags) tags.push_back(reason_tag_name(t));
        j["reason"] = tags;
    }
    if (!c.note.empty()) j["note"] = c.note;
    return j;
}

inline ToolCall toolcall_from_json(const Json& j) {
    ToolCall c;
    std::string a = j.at("action").get<std::string>();
    c.action = a == "buy"    ? ToolCall::Action::Buy
               : a == "sell" ? ToolCall::Action::Sell
                             : ToolCall::Action::Observe;
    if (j.contains("token")) c.token_id = j["token"].get<std::string>();
    if (j.contains("fraction_ppm")) c.fraction_ppm = j["fraction_ppm"].get<u64>();
    if (j.contains("strategy")) c.strategy_label = j["strategy"].get<std::string>();
    if (j.contains("reason"))
        for (const auto& t : j["reason"])
            c.reason_tags.push_back(*reason_tag_from_name(t.get<std::string>()));
    if (j.contains("note")) c.note = j["note"].get<std::string>();
    return c;
}

inline Json to_json(const Settlement& s) {
    switch (s.kind) {
        case Settlement::Kind::NotApplicable: return Json{{"kind", "none"}};
        case Settlement::Kind::Failed:
            return Json{{"kind", "failed"}, {"reason", s.failure_reason}};
        case Settlement::Kind::Settled:
            return Json{{"kind", "settled"},
                        {"side", side_name(s.side)},
                        {"eth", u128_to_string(s.eth_amount.raw)},
                        {"tokens", u128_to_string(s.token_amount.raw)},
                        {"fee_protocol", u128_to_string(s.fee_protocol.raw)},
                        {"fee_lp", u128_to_string(s.fee_lp.raw)},
                        {"realized_pnl_wei", std::to_string((long long)s.realized_pnl_wei)}};
    }
    return {};
}

inline Settlement settlement_from_json(const Json& j) {
    Settlement s;
    std::string k = j.at("kind").get<std::string>();
    if (k == "none") return s;
    if (k == "failed") {
        s.kind = Settlement::Kind::Failed;
        s.failure_reason = j.at("reason").get<std::string>();
        return s;
    }
    s.kind = Settlement::Kind::Settled;
    s.side = j.at("side").get<std::string>() == "buy" ? Side::Buy : Side::Sell;
    s.eth_amount = Eth(u128_from_string(j.at("eth").get<std::string>()));
    s.token_amount = TokenUnits(u128_from_string(j.at("tokens").get<std::string>()));
    s.fee_protocol = Eth(u128_from_string(j.at("fee_protocol").get<std::string>()));
    s.fee_lp = Eth(u128_from_string(j.at("fee_lp").get<std::string>()));
    s.realized_pnl_wei = i128(std::stoll(j.at("realized_pnl_wei").get<std::string>()));
    return s;
}

inline Json verdict_to_json(const Verdict& v) {
    if (auto* a = std::get_if<Accepted>(&v)) {
        Json j{{"accepted", true}, {"swap", a->is_swap}};
        if (a->is_swap) {
            j["impact_bps"] = a->quote.price_impact_bps;
            j["min_token_out"] = u128_to_string(a->min_token_out.raw);
            j["min_eth_out"] = u128_to_string(a->min_eth_out.raw);
        }
        return j;
    }
    const auto& r = std::get<Rejected>(v);
    return Json{{"accepted", false}, {"code", reject_code_name(r.code)}, {"detail", r.detail}};
}

// Verdicts round-trip as summaries: quotes are recomputable from the replay.
struct VerdictSummary {
    bool accepted = false;
    bool swap = false;
    std::string code, detail;
};

inline Json record_to_json(const TraceRecord& r) {
    Json tags = Json::array();
    for (ReasonTag t : r.reason_tags) tags.push_back(reason_tag_name(t));
    Json j{{"type", "invocation"},
           {"id", r.invocation_id},
           {"tick", r.tick},
           {"vault", r.vault_id},
           {"config_version", r.config_version},
           {"brief_hash", r.brief_hash},
           {"structured_digest", r.structured_digest},
           {"variant", r.template_variant_id},
           {"sliders", vaultsim::to_json(r.sliders)},
           {"raw", r.raw_response},
           {"settlement", to_json(r.settlement)},
           {"before", to_json(r.portfolio_before)},
           {"after", to_json(r.portfolio_after)},
           {"tags", tags}};
    if (r.parsed) j["parsed"] = to_json(*r.parsed);
    if (r.parse_error)
        j["parse_error"] = Json{{"position", r.parse_error->position},
                                {"cause", r.parse_error->cause}};
    if (r.verdict) j["verdict"] = verdict_to_json(*r.verdict);
    return j;
}

inline Json reap_to_json(const ReapEvent& ev) {
    Json comp = Json::array();
    for (const auto& c : ev.compensation)
        comp.push_back(Json{{"vault", c.vault_id}, {"amount", u128_to_string(c.amount.raw)}});
    return Json{{"type", "reap"},
                {"tick", ev.tick},
                {"eliminated", ev.eliminated_token},
                {"leader", ev.leader_token},
                {"eth_moved", u128_to_string(ev.eth_moved.raw)},
                {"leader_acquired", u128_to_string(ev.leader_acquired.raw)},
                {"compensation", comp},
                {"dust", u128_to_string(ev.dust.raw)}};
}

inline Json owner_to_json(const OwnerEvent& ev) {
    return Json{{"type", "owner_action"},
                {"tick", ev.tick},
                {"vault", ev.vault_id},
                {"kind", ev.kind},
                {"detail", ev.detail}};
}

} // namespace trace_serde

inline std::string export_trace_to_string(const TraceStore& store, const TraceManifest& manifest) {
    std::string out;
    Json m{{"type", "manifest"},
           {"format", TRACE_FORMAT_ID},
           {"seed", u128_to_string(manifest.seed)},
           {"scenario_sha256", manifest.scenario_sha256},
           {"scenario", manifest.scenario},
           {"template_variant", manifest.template_variant},
           {"record_count", store.record_count()},
           {"event_count", store.events().size()}};
    out += m.dump();
    out += '\n';
    for (const auto& e : store.events()) {
        if (auto* r = std::get_if<TraceRecord>(&e)) out += trace_serde::record_to_json(*r).dump();
        else if (auto* rp = std::get_if<ReapEvent>(&e)) out += trace_serde::reap_to_json(*rp).dump();
        else out += trace_serde::owner_to_json(std::get<OwnerEvent>(e)).dump();
        out += '\n';
    }
    return out;
}

inline void export_trace(const TraceStore& store, const TraceManifest& manifest,
                         const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open trace export path: " + path);
    f << export_trace_to_string(store, manifest);
}

inline std::string export_briefs_to_string(const TraceStore& store) {
    std::string out;
    for (const auto& [hash, text] : store.brief_archive()) {
        out += Json{{"hash", hash}, {"text", text}}.dump();
        out += '\n';
    }
    return out;
}

struct CorruptLine {
    std::size_t line = 0; // 1-based
    std::string cause;
};

struct ImportedTrace {
    TraceManifest manifest;
    TraceStore store;
    u64 declared_record_count = 0;
};

inline Expected<ImportedTrace, CorruptLine> import_trace_from_string(const std::string& text) {
    ImportedTrace out;
    auto lines = split_lines(text);
    if (lines.empty()) return CorruptLine{1, "empty trace file"};

    Json m = Json::parse(lines[0], nullptr, false);
    if (m.is_discarded() || !m.is_object() || m.value("type", "") != "manifest")
        return CorruptLine{1, "missing or malformed manifest line"};
    if (m.value("format", "") != TRACE_FORMAT_ID)
        return CorruptLine{1, "unsupported trace format"};
    try {
        out.manifest.seed = u64(u128_from_string(m.at("seed").get<std::string>()));
        out.manifest.scenario_sha256 = m.at("scenario_sha256").get<std::string>();
        out.manifest.scenario = m.at("scenario");
        out.manifest.template_variant = m.at("template_variant").get<std::string>();
        out.declared_record_count = m.at("record_count").get<u64>();
    } catch (const std::exception& e) {
        return CorruptLine{1, std::string("manifest: ") + e.what()};
    }

    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::size_t lineno = i + 1;
        Json j = Json::parse(lines[i], nullptr, false);
        if (j.is_discarded() || !j.is_object())
            return CorruptLine{lineno, "malformed JSON line"};
        std::string type = j.value("type", "");
        try {
            if (type == "invocation") {
                TraceRecord r;
                r.invocation_id = j.at("id").get<u64>();
                r.tick = j.at("tick").get<Tick>();
                r.vault_id = j.at("vault").get<VaultId>();
                r.config_version = j.at("config_version").get<u64>();
                r.brief_hash = j.at("brief_hash").get<std::string>();
                r.structured_digest = j.at("structured_digest").get<std::string>();
                r.template_variant_id = j.at("variant").get<std::string>();
                r.sliders = slider_config_from_json(j.at("sliders"));
                r.raw_response = j.at("raw").get<std::string>();
                if (j.contains("parsed")) r.parsed = trace_serde::toolcall_from_json(j["parsed"]);
                if (j.contains("parse_error"))
                    r.parse_error = ParseError{j["parse_error"].at("position").get<std::size_t>(),
                                               j["parse_error"].at("cause").get<std::string>()};
                if (j.contains("verdict")) {
                    const Json& v = j["verdict"];
                    if (v.at("accepted").get<bool>()) {
                        Accepted a;
                        a.is_swap = v.at("swap").get<bool>();
                        if (a.is_swap) {
                            a.quote.price_impact_bps = v.at("impact_bps").get<u64>();
                            a.min_token_out = TokenUnits(
                                u128_from_string(v.at("min_token_out").get<std::string>()));
                            a.min_eth_out =
                                Eth(u128_from_string(v.at("min_eth_out").get<std::string>()));
                            // reconstruct the sides so taxonomy and display agree
                            a.quote.side = r.parsed && r.parsed->action == ToolCall::Action::Sell
                                               ? Side::Sell
                                               : Side::Buy;
                        }
                        r.verdict = a;
                    } else {
                        auto code = reject_code_from_name(v.at("code").get<std::string>());
                        if (!code) return CorruptLine{lineno, "unknown rejection code"};
                        r.verdict = Rejected{*code, v.at("detail").get<std::string>()};
                    }
                }
                r.settlement = trace_serde::settlement_from_json(j.at("settlement"));
                r.portfolio_before = trace_serde::portfolio_from_json(j.at("before"));
                r.portfolio_after = trace_serde::portfolio_from_json(j.at("after"));
                for (const auto& t : j.at("tags")) {
                    auto tag = reason_tag_from_name(t.get<std::string>());
                    if (!tag) return CorruptLine{lineno, "unknown reason tag"};
                    r.reason_tags.push_back(*tag);
                }
                out.store.archive_brief(r.brief_hash, "");
                auto res = out.store.append(std::move(r));
                if (!res.ok())
                    return CorruptLine{lineno, res.error() == TraceAppendError::NonMonotoneId
                                                   ? "non-monotone invocation id"
                                                   : "dangling brief hash"};
            } else if (type == "reap") {
                ReapEvent ev;
                ev.tick = j.at("tick").get<Tick>();
                ev.eliminated_token = j.at("eliminated").get<std::string>();
                ev.leader_token = j.at("leader").get<std::string>();
                ev.eth_moved = Eth(u128_from_string(j.at("eth_moved").get<std::string>()));
                ev.leader_acquired =
                    TokenUnits(u128_from_string(j.at("leader_acquired").get<std::string>()));
                for (const auto& c : j.at("compensation"))
                    ev.compensation.push_back(
                        {c.at("vault").get<VaultId>(),
                         TokenUnits(u128_from_string(c.at("amount").get<std::string>()))});
                ev.dust = TokenUnits(u128_from_string(j.at("dust").get<std::string>()));
                out.store.append_reap(std::move(ev));
            } else if (type == "owner_action") {
                OwnerEvent ev;
                ev.tick = j.at("tick").get<Tick>();
                ev.vault_id = j.at("vault").get<VaultId>();
                ev.kind = j.at("kind").get<std::string>();
                ev.detail = j.at("detail").get<std::string>();
                out.store.append_owner(std::move(ev));
            } else {
                return CorruptLine{lineno, "unknown event type: " + type};
            }
        } catch (const std::exception& e) {
            return CorruptLine{lineno, e.what()};
        }
    }
    if (out.store.record_count() != out.declared_record_count)
        return CorruptLine{lines.size() + 1,
                           "record count mismatch: manifest declares " +
                               std::to_string(out.declared_record_count) + ", found " +
                               std::to_string(out.store.record_count())};
    return out;
}

inline Expected<ImportedTrace, CorruptLine> import_trace(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return CorruptLine{0, "cannot open trace file: " + path};
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return import_trace_from_string(text);
}

// --- failure taxonomy --------------------------------------------------------

// Partition of all invocation records. Settlement success is measured over
// policy-valid submissions only: parse errors and guard rejections are
// excluded from that denominator by construction.
struct FailureTaxonomy {
    u64 parse_errors = 0;
    std::map<std::string, u64> guard_rejections; // by stable code name
    u64 settlement_failures = 0;
    u64 settled = 0;
    u64 observes = 0; // accepted, not applicable to settlement

    u64 rejections_total() const {
        u64 n = 0;
        for (const auto& [c, k] : guard_rejections) n += k;
        return n;
    }
    u64 total() const {
        return parse_errors + rejections_total() + settlement_failures + settled + observes;
    }
    // settled / (settled + settlement_failures)
    double settlement_success_rate() const {
        u64 denom = settled + settlement_failures;
        return denom == 0 ? 1.0 : double(settled) / double(denom);
    }
};

inline FailureTaxonomy failure_taxonomy(const TraceStore& store) {
    FailureTaxonomy t;
    for (const auto& e : store.events()) {
        auto* r = std::get_if<TraceRecord>(&e);
        if (!r) continue;
        if (r->parse_error) {
            ++t.parse_errors;
            continue;
        }
        if (r->verdict && !accepted(*r->verdict)) {
            ++t.guard_rejections[reject_code_name(std::get<Rejected>(*r->verdict).code)];
            continue;
        }
        switch (r->settlement.kind) {
            case Settlement::Kind::Settled: ++t.settled; break;
            case Settlement::Kind::Failed: ++t.settlement_failures; break;
            case Settlement::Kind::NotApplicable: ++t.observes; break;
        }
    }
    return t;
}

// First line where two exports diverge; carries the invocation id when the
// divergent line is an invocation record.
struct ExportDivergence {
    std::size_t line = 0; // 1-based
    std::optional<u64> invocation_id;
};

inline std::optional<ExportDivergence> first_divergence(const std::string& a,
                                                        const std::string& b) {
    auto la = split_lines(a);
    auto lb = split_lines(b);
    std::size_t n = std::min(la.size(), lb.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (la[i] == lb[i]) continue;
        ExportDivergence d;
        d.line = i + 1;
        for (const std::string& line : {la[i], lb[i]}) {
            Json j = Json::parse(line, nullptr, false);
            if (!j.is_discarded() && j.is_object() && j.value("type", "") == "invocation") {
                d.invocation_id = j.value("id", u64(0));
                break;
            }
        }
        return d;
    }
    if (la.size() != lb.size()) return ExportDivergence{n + 1, std::nullopt};
    return std::nullopt;
}

} // namespace vaultsim
