#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "fracwalk/parallel.hpp"
#include "fracwalk/sequence.hpp"

namespace fracwalk {

/// Deliberate defects for mutation-testing the suite itself.
enum class Fault {
    None,
    IgnoreDeltaInFrw,   ///< FRW merges behave as if delta were 0
};
Fault parse_fault(std::string_view s);

struct AcceptanceOptions {
    /// Reduced trial counts with widened tolerances; see criterion notes.
    bool quick = false;
    std::uint64_t seed = 20240917;
    /// Criterion ids to run; empty runs all fifteen.
    std::vector<int> only;
    Exec exec = Exec::Parallel;
    Fault fault = Fault::None;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string summary;
    double seconds = 0.0;
    nlohmann::json detail;
};

/// Runs the selected criteria in id order. `on_result` (optional) is called
/// as each finishes.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

nlohmann::json to_json(const CriterionResult& r);
std::string format_line(const CriterionResult& r);

/// Brute-force inversion ratio: every X, every Y inside X, heights from the
/// prefix array. Returns (num, den) of the minimum ratio and the first X
/// attaining it; den = 0 when no X qualifies.
struct NaiveInversion {
    std::int64_t num = 0;
    std::int64_t den = 0;
    std::size_t x_lo = 0, x_hi = 0;
    /// (length, num, den) of the worst ratio per length.
    std::vector<std::tuple<std::size_t, std::int64_t, std::int64_t>> per_length;
};
NaiveInversion naive_inversion_ratio(std::span<const std::int64_t> prefix, std::size_t min_len);

}  // namespace fracwalk
