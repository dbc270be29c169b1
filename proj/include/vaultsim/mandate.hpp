// Versioned, append-only log of user configuration: five 1-5 sliders plus
// prioritized, expiring strategy texts. The runtime reads the latest commit
// at or before each invocation tick.
#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "vaultsim/amount.hpp"
#include "vaultsim/directive.hpp"
#include "vaultsim/expected.hpp"
#include "vaultsim/pool.hpp"

namespace vaultsim {

inline constexpr int SLIDER_MIN = 1;
inline constexpr int SLIDER_MAX = 5;
inline constexpr std::size_t MAX_ACTIVE_STRATEGIES = 10;
inline constexpr std::size_t MAX_STRATEGY_TEXT = 2000;

struct SliderConfig {
    int trading_activity = 3;
    int asset_risk_preference = 3;
    int trade_size = 3;
    int holding_style = 3;
    int diversification = 3;

    bool valid() const {
        for (int v : {trading_activity, asset_risk_preference, trade_size, holding_style,
                      diversification})
            if (v < SLIDER_MIN || v > SLIDER_MAX) return false;
        return true;
    }

    bool operator==(const SliderConfig&) const = default;
};

enum class Priority { High, Medium, Low };

inline const char* priority_name(Priority p) {
    switch (p) {
        case Priority::High: return "HIGH";
        case Priority::Medium: return "MEDIUM";
        case Priority::Low: return "LOW";
    }
    return "?";
}

struct Strategy {
    std::string label; // stable identifier, e.g. strategy1
    std::string text;  // opaque bytes; non-Latin text must round-trip
    Priority priority = Priority::Medium;
    std::optional<Tick> expiry;
    Tick created_at = 0;

    bool operator==(const Strategy&) const = default;
};

struct ConfigCommit {
    u64 version = 0;
    Tick committed_at = 0;
    SliderConfig sliders;
    std::vector<Strategy> strategies;

    bool operator==(const ConfigCommit&) const = default;
};

enum class MandateError {
    SliderOutOfRange,
    TooManyStrategies,
    StrategyTextTooLong,
    EmptyStrategyText,
    DuplicateStrategyLabel,
    NoConfigYet,
};

inline const char* mandate_error_name(MandateError e) {
    switch (e) {
        case MandateError::SliderOutOfRange: return "SliderOutOfRange";
        case MandateError::TooManyStrategies: return "TooManyStrategies";
        case MandateError::StrategyTextTooLong: return "StrategyTextTooLong";
        case MandateError::EmptyStrategyText: return "EmptyStrategyText";
        case MandateError::DuplicateStrategyLabel: return "DuplicateStrategyLabel";
        case MandateError::NoConfigYet: return "NoConfigYet";
    }
    return "?";
}

class MandateLog {
public:
    explicit MandateLog(std::size_t max_strategies = MAX_ACTIVE_STRATEGIES,
                        std::size_t max_text = MAX_STRATEGY_TEXT)
        : max_strategies_(max_strategies), max_text_(max_text) {}

    Expected<u64, MandateError> commit_config(const SliderConfig& sliders,
                                              std::vector<Strategy> strategies, Tick at) {
        if (!sliders.valid()) return MandateError::SliderOutOfRange;
        if (strategies.size() > max_strategies_) return MandateError::TooManyStrategies;
        for (std::size_t i = 0; i < strategies.size(); ++i) {
            const auto& s = strategies[i];
            if (s.text.empty()) return MandateError::EmptyStrategyText;
            if (s.text.size() > max_text_) return MandateError::StrategyTextTooLong;
            for (std::size_t j = 0; j < i; ++j)
                if (strategies[j].label == s.label) return MandateError::DuplicateStrategyLabel;
        }
        if (!commits_.empty() && at < commits_.back().committed_at)
            throw std::logic_error("mandate commits must be appended in tick order");
        ConfigCommit c;
        c.version = commits_.empty() ? 1 : commits_.back().version + 1;
        c.committed_at = at;
        c.sliders = sliders;
        c.strategies = std::move(strategies);
        commits_.push_back(std::move(c));
        return commits_.back().version;
    }

    // Latest commit with committed_at <= at (commits are visible the same tick).
    Expected<const ConfigCommit*, MandateError> read_latest(Tick at) const {
        const ConfigCommit* best = nullptr;
        for (const auto& c : commits_) {
            if (c.committed_at <= at) best = &c;
            else break;
        }
        if (!best) return MandateError::NoConfigYet;
        return best;
    }

    const ConfigCommit* by_version(u64 version) const {
        for (const auto& c : commits_)
            if (c.version == version) return &c;
        return nullptr;
    }

    bool empty() const { return commits_.empty(); }
    std::size_t size() const { return commits_.size(); }
    const std::deque<ConfigCommit>& commits() const { return commits_; }

private:
    std::size_t max_strategies_;
    std::size_t max_text_;
    std::deque<ConfigCommit> commits_;
};

// Expired strategies drop out; commit order is preserved, priorities untouched.
inline std::vector<const Strategy*> active_strategies(const ConfigCommit& commit, Tick now) {
    std::vector<const Strategy*> out;
    for (const auto& s : commit.strategies)
        if (!s.expiry || *s.expiry >= now) out.push_back(&s);
    return out;
}

// Mandate-specification warnings. These never block commits; they exist so
// the control surface can flag inconsistencies before the agent trades.
struct Inconsistency {
    enum class Code { HoldVsHoldingStyle, BuyOnlyNoCapital, VagueMandate };
    Code code;
    std::string strategy_label;
    std::string detail;
};

inline const char* inconsistency_name(Inconsistency::Code c) {
    switch (c) {
        case Inconsistency::Code::HoldVsHoldingStyle: return "HoldVsHoldingStyle";
        case Inconsistency::Code::BuyOnlyNoCapital: return "BuyOnlyNoCapital";
        case Inconsistency::Code::VagueMandate: return "VagueMandate";
    }
    return "?";
}

// `funding` is optional context; the zero-funding rule is skipped when unknown.
inline std::vector<Inconsistency> lint_mandate(const ConfigCommit& commit,
                                               std::optional<Eth> funding = std::nullopt) {
    std::vector<Inconsistency> out;
    for (const auto& s : commit.strategies) {
        DirectiveClass d = classify_directive(s.text);
        std::string low = detail::lower(s.text);

        if (d.kind == DirectiveClass::Kind::HoldRule && commit.sliders.holding_style <= 2) {
            out.push_back({Inconsistency::Code::HoldVsHoldingStyle, s.label,
                           "hold-forever directive with holding_style <= 2"});
        }
        if (d.kind == DirectiveClass::Kind::Restriction && d.restriction_buy_only &&
            commit.sliders.trade_size == 5 && funding && funding->is_zero()) {
            out.push_back({Inconsistency::Code::BuyOnlyNoCapital, s.label,
                           "buy-only restriction with trade_size 5 and no funding"});
        }
        bool vague = detail::contains(low, "outperform") || detail::contains(low, "pick winner");
        if (vague) {
            bool has_bound = detail::extract_percent_bps(low).has_value() ||
                             !detail::extract_symbols(s.text).empty() ||
                             detail::contains(low, "exit") || detail::contains(low, "stop");
            if (!has_bound)
                out.push_back({Inconsistency::Code::VagueMandate, s.label,
                               "performance goal without token, exit or bound"});
        }
    }
    return out;
}

} // namespace vaultsim
