#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fracwalk/rng.hpp"
#include "fracwalk/sequence.hpp"
#include "fracwalk/serialization.hpp"

namespace fracwalk {

enum class Family { Uniform, FRW, OptFRW, AFRW, AOFRW, EntropyConditioned };
enum class FlipMode { ExactCount, Bernoulli };

std::string_view to_string(Family f);
std::string_view to_string(FlipMode m);
/// Accepts the canonical names ("uniform", "frw", "opt_frw", "afrw", "aofrw",
/// "entropy_conditioned") case-insensitively, with '-' or '_'.
Family parse_family(std::string_view name);
FlipMode parse_flip_mode(std::string_view name);

/// Distribution family plus its parameters.
///
/// The flip budget of a merge is a height change: delta*|h(s1)| for the
/// FRW pair, delta*sqrt(n) for the Opt-FRW pair, where n is the half length.
/// Each flip moves the height by 2, so ExactCount performs budget/2 flips,
/// rounded stochastically to an integer with the right mean. Bernoulli mode
/// flips each eligible entry with probability budget/n.
struct GeneratorSpec {
    Family family = Family::Uniform;
    double delta = 0.0;
    /// 0 selects default_base_len(family, total_len).
    std::uint64_t base_len = 0;
    std::uint64_t total_len = 1;
    FlipMode flip_mode = FlipMode::ExactCount;
    /// Deviation multiplier for EntropyConditioned; ignored otherwise.
    double k = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

inline constexpr std::uint64_t kMaxTotalLen = std::uint64_t{1} << 26;
inline constexpr std::uint64_t kEntropyTrialBudget = 10'000'000;

/// FRW/AFRW: 2^ceil(log2(100 log2 T)). Opt-FRW/AOFRW: 2^ceil(0.75 log2 T).
/// Both capped at T. Uniform and EntropyConditioned use T.
std::uint64_t default_base_len(Family family, std::uint64_t total_len);

/// Throws ConfigError naming the violated constraint.
void validate(const GeneratorSpec& spec);
/// Copy with base_len filled in, validated.
GeneratorSpec resolve(GeneratorSpec spec);

bool is_augmented(Family f) noexcept;
bool is_recursive(Family f) noexcept;

/// Parity-lifted threshold ceil(k sqrt T) used by EntropyConditioned.
std::int64_t entropy_threshold(double k, std::uint64_t total_len);

/// One merge of two halves.
struct FlipRecord {
    unsigned level = 0;          ///< 0 for merges of two base blocks
    std::size_t block_lo = 0;    ///< start of the modified second half
    int direction = 0;           ///< sign(h(s1)); 0 means no change
    double requested = 0.0;      ///< real-valued flip budget (height budget / 2)
    std::int64_t applied = 0;    ///< sign flips performed
    std::int64_t augmented = 0;  ///< +-2 corrections beyond the eligible entries
    std::int64_t height_change = 0;
};

struct GenerationLog {
    std::vector<FlipRecord> merges;
    std::uint64_t attempts = 0;   ///< rejection-sampling draws (EntropyConditioned)
    double acceptance_rate = 1.0;

    std::int64_t total_augmented() const;
};

/// Positions [lo, hi) are forced to `sign` in the initial uniform fill, before
/// any merge runs. Used to plant extremal histories.
struct Planting {
    std::size_t lo = 0;
    std::size_t hi = 0;
    int sign = 1;
};

BitSequence gen_uniform(const GeneratorSpec& spec, Rng& rng);
BitSequence gen_frw(const GeneratorSpec& spec, Rng& rng, GenerationLog* log = nullptr);
BitSequence gen_opt_frw(const GeneratorSpec& spec, Rng& rng, GenerationLog* log = nullptr);
IntSequence gen_afrw(const GeneratorSpec& spec, Rng& rng, GenerationLog* log = nullptr);
IntSequence gen_aofrw(const GeneratorSpec& spec, Rng& rng, GenerationLog* log = nullptr);
BitSequence gen_entropy_conditioned(const GeneratorSpec& spec, Rng& rng,
                                    GenerationLog* log = nullptr,
                                    std::uint64_t trial_budget = kEntropyTrialBudget);

/// Dispatches on spec.family. Augmented families yield IntSequence.
AnySequence generate(const GeneratorSpec& spec, Rng& rng, GenerationLog* log = nullptr);

/// Low-level entry point shared by all families: fills `out` (resized to T)
/// and returns the total height. Planting is rejected for EntropyConditioned.
std::int64_t sample_values(const GeneratorSpec& spec, Rng& rng, std::vector<std::int32_t>& out,
                           GenerationLog* log = nullptr, const Planting* plant = nullptr);

/// Prefix sums of one sample (size T + 1), reusing `values` as scratch.
void sample_prefix(const GeneratorSpec& spec, Rng& rng, std::vector<std::int32_t>& values,
                   std::vector<std::int64_t>& prefix, const Planting* plant = nullptr);

/// Height of one sample.
std::int64_t sample_height(const GeneratorSpec& spec, Rng& rng);

nlohmann::json to_json(const GeneratorSpec& spec);
/// Requires exactly the seven spec fields; unknown or missing fields throw ConfigError.
GeneratorSpec spec_from_json(const nlohmann::json& j);

}  // namespace fracwalk
