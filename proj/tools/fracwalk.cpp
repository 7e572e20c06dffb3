// fracwalk command-line front end.
//
// Every subcommand resolves its flags into a JSON config, runs from that
// config alone, and writes <command>.manifest.json next to its outputs.
// `fracwalk --replay <manifest>` reruns the recorded config.
//
// Exit codes: 0 success, 1 analysis failure, 2 configuration error.

#include <bit>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fracwalk/acceptance.hpp"
#include "fracwalk/analysis.hpp"
#include "fracwalk/errors.hpp"
#include "fracwalk/fbm.hpp"
#include "fracwalk/fractal.hpp"
#include "fracwalk/generators.hpp"
#include "fracwalk/predictors.hpp"
#include "fracwalk/serialization.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fracwalk;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAnalysis = 1;
constexpr int kExitConfig = 2;

struct Outcome {
    int code = kExitOk;
    std::vector<std::string> outputs;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void emit(Outcome& out, const fs::path& dir, const std::string& name, const std::string& contents)
{
    write_file_atomic(dir / name, contents);
    out.outputs.push_back(name);
}

std::string sequence_bytes(const AnySequence& seq, const std::string& format)
{
    std::ostringstream os;
    std::visit(
        [&](const auto& s) {
            if (format == "csv") {
                write_csv(os, s);
            } else if (format == "binary") {
                write_binary(os, s);
            } else {
                throw ConfigError("format must be csv or binary");
            }
        },
        seq);
    return os.str();
}

std::string sequence_name(const std::string& format) { return format == "csv" ? "sequence.csv" : "sequence.bin"; }

Exec exec_of(const json& cfg) { return cfg.value("parallelism", 0) == 1 ? Exec::Serial : Exec::Parallel; }

// Spec flags shared by every command that samples sequences.
struct SpecFlags {
    std::string family = "uniform";
    double delta = 0.0;
    std::uint64_t base_len = 0;
    std::uint64_t total_len = 1024;
    std::string flip_mode = "exact_count";
    double k = 0.0;
    std::uint64_t seed = 0;

    void add(CLI::App* app, bool with_len = true)
    {
        app->add_option("--family", family, "uniform | frw | opt_frw | afrw | aofrw | entropy_conditioned");
        app->add_option("--delta", delta, "bias parameter");
        app->add_option("--base_len", base_len, "base block length (0: family default)");
        if (with_len) {
            app->add_option("--total_len,--T", total_len, "sequence length (power of two)");
        }
        app->add_option("--flip_mode", flip_mode, "exact_count | bernoulli");
        app->add_option("--k", k, "entropy_conditioned threshold multiplier");
        app->add_option("--seed", seed, "seed");
    }

    json to_json() const
    {
        return {{"family", family}, {"delta", delta}, {"base_len", base_len}, {"total_len", total_len},
                {"flip_mode", flip_mode}, {"k", k}, {"seed", seed}};
    }
};

GeneratorSpec spec_of(const json& cfg)
{
    GeneratorSpec s = spec_from_json(cfg.at("spec"));
    validate(s);
    return s;
}

// ---------------------------------------------------------------------------
// commands, each running from a resolved config

Outcome run_generate(const json& cfg, const fs::path& dir)
{
    Outcome out;
    const auto spec = spec_of(cfg);
    Rng rng(spec.seed);
    GenerationLog log;
    const auto seq = generate(spec, rng, &log);
    const std::string format = cfg.at("format");
    emit(out, dir, sequence_name(format), sequence_bytes(seq, format));
    json summary = {{"spec", to_json(resolve(spec))},
                    {"length", std::visit([](const auto& s) { return s.size(); }, seq)},
                    {"height", std::visit([](const auto& s) { return s.total_height(); }, seq)},
                    {"merges", log.merges.size()},
                    {"augmented", log.total_augmented()},
                    {"attempts", log.attempts},
                    {"acceptance_rate", log.acceptance_rate}};
    emit(out, dir, "generate.json", dump(summary));
    return out;
}

Outcome run_stats(const json& cfg, const fs::path& dir)
{
    Outcome out;
    const auto spec = spec_of(cfg);
    const auto Ts = cfg.at("T_list").get<std::vector<std::uint64_t>>();
    const auto rep = deviation_stats(spec, Ts, cfg.at("trials"), exec_of(cfg));
    emit(out, dir, "stats.json", dump(to_json(rep)));
    std::ostringstream csv;
    csv << "T,trials,mean_dev,median_dev,rms_dev,median_se,mean_se,anti_concentration\n";
    csv.precision(17);
    for (const auto& r : rep.rows) {
        csv << r.T << ',' << r.trials << ',' << r.mean_dev << ',' << r.median_dev << ',' << r.rms_dev << ','
            << r.median_se << ',' << r.mean_se << ',' << r.anti_concentration << '\n';
    }
    emit(out, dir, "stats.csv", csv.str());
    if (!rep.ordering_ok()) {
        std::cerr << "warning: median <= 3 mean <= 3 rms ordering violated\n";
        out.code = kExitAnalysis;
    }
    return out;
}

// Interval flags are 1-based and closed, [first, last].
Interval interval_of(const json& cfg, const char* key, std::size_t total)
{
    const auto v = cfg.at(key).get<std::vector<std::size_t>>();
    if (v.size() != 2 || v[0] < 1 || v[1] < v[0] || v[1] > total) {
        throw ConfigError(std::string(key) + " must be FIRST LAST with 1 <= FIRST <= LAST <= total_len");
    }
    return Interval(v[0] - 1, v[1], total);
}

Outcome run_predict(const json& cfg, const fs::path& dir)
{
    Outcome out;
    const auto spec = spec_of(cfg);
    const std::string predictor = cfg.at("predictor");
    const Interval iv = interval_of(cfg, "I", spec.total_len);
    const std::size_t window = cfg.at("window");
    const std::size_t trials = cfg.at("trials");
    std::optional<StopRule> stop;
    if (cfg.contains("lower_limit") || cfg.contains("upper_limit")) {
        stop = StopRule{cfg.value("lower_limit", std::int64_t{-1}), cfg.value("upper_limit", std::int64_t{1})};
        if (stop->lower_limit >= 0 || stop->upper_limit <= 0) {
            throw ConfigError("lower_limit must be negative and upper_limit positive");
        }
    }
    if (predictor == "adaptive_bettor") {
        const double theta = cfg.value("theta", std::sqrt(static_cast<double>(iv.length())));
        stop = inversion_stop_rule(theta, cfg.value("alpha", 0.5));
    }
    if ((predictor == "sign_of_prefix" || predictor == "adaptive_bettor") && (window == 0 || window > iv.lo())) {
        throw ConfigError("window must lie in [1, first - 1] for prefix predictors");
    }
    const std::vector<std::string> known = {"sign_of_prefix", "adaptive_bettor", "weighted_majority", "block_sign"};
    if (std::find(known.begin(), known.end(), predictor) == known.end()) {
        throw ConfigError("predictor must be one of sign_of_prefix, adaptive_bettor, weighted_majority, block_sign");
    }

    const std::uint64_t stream = derive_seed(spec.seed, 0x9e7d);
    const auto ledgers = map_trials<PayoffLedger>(
        trials,
        [&](std::size_t t) {
            Rng rng = Rng::for_stream(stream, t);
            std::vector<std::int32_t> values;
            sample_values(spec, rng, values, nullptr, nullptr);
            const std::span<const std::int32_t> all(values);
            const auto target = all.subspan(iv.lo(), iv.length());
            if (predictor == "weighted_majority" || predictor == "block_sign") {
                PayoffLedger l;
                l.payoff = predictor == "block_sign"
                               ? block_sign_payoff(target, cfg.value("block", std::size_t{1}))
                               : static_cast<std::int64_t>(std::llround(weighted_majority_expected(target)));
                l.steps_used = target.size();
                return l;
            }
            std::int64_t h = 0;
            for (std::size_t i = iv.lo() - window; i < iv.lo(); ++i) {
                h += values[i];
            }
            return run_constant(sign_with_tie(h), target, stop);
        },
        exec_of(cfg));

    std::ostringstream csv;
    csv << "trial,payoff,steps,cause\n";
    double sum = 0.0;
    for (std::size_t t = 0; t < ledgers.size(); ++t) {
        csv << t << ',' << ledgers[t].payoff << ',' << ledgers[t].steps_used << ','
            << to_string(ledgers[t].stop_cause) << '\n';
        sum += static_cast<double>(ledgers[t].payoff);
    }
    emit(out, dir, "predict.csv", csv.str());
    emit(out, dir, "predict.json",
         dump({{"spec", to_json(resolve(spec))},
               {"predictor", predictor},
               {"interval", {{"lo", iv.lo()}, {"hi", iv.hi()}}},
               {"mean_payoff", sum / static_cast<double>(trials)},
               {"trials", trials},
               {"caveat", "weighted_majority reports its exact expected payoff rounded to an integer"}}));
    return out;
}

Outcome run_inversion(const json& cfg, const fs::path& dir)
{
    Outcome out;
    AnySequence seq;
    if (cfg.contains("input")) {
        seq = read_sequence_file(cfg.at("input").get<std::string>());
    } else {
        const auto spec = spec_of(cfg);
        Rng rng(spec.seed);
        seq = generate(spec, rng);
    }
    const auto prefix = std::visit([](const auto& s) { return s.prefix(); }, seq);
    const auto rep = inversion_ratio(prefix, cfg.at("min_len"), cfg.at("dyadic_only"), exec_of(cfg));
    emit(out, dir, "inversion.json", dump(to_json(rep)));
    return out;
}

Outcome run_alphaq(const json& cfg, const fs::path& dir)
{
    Outcome out;
    const auto spec = spec_of(cfg);
    const Interval X = interval_of(cfg, "X", spec.total_len);
    const auto alphas = cfg.at("alphas").get<std::vector<double>>();
    const std::size_t trials = cfg.at("trials");
    const auto rep = alpha_q_estimate(spec, X.lo(), X.length(), alphas, trials, {}, exec_of(cfg));
    json doc = to_json(rep);
    if (cfg.value("certify", false)) {
        const double theta = cfg.value("theta", rep.median_dev);
        doc["certify"] = to_json(certify_inversion(spec, X.lo(), X.length(), theta, cfg.at("s"), trials,
                                                   cfg.value("alpha", 0.5), exec_of(cfg)));
    }
    emit(out, dir, "alphaq.json", dump(doc));
    if (!rep.threshold_met) {
        std::cerr << "median deviation below the floor; no q estimates\n";
        out.code = kExitAnalysis;
    }
    return out;
}

Outcome run_theta(const json& cfg, const fs::path& dir)
{
    Outcome out;
    json rows = json::array();
    for (double a : cfg.at("alpha").get<std::vector<double>>()) {
        const double t = solve_theta(a);
        rows.push_back({{"alpha", a}, {"theta", t}, {"residual", theta_residual(a, 1.0 / t)}});
    }
    std::cout << rows.dump(2) << "\n";
    emit(out, dir, "theta.json", dump(rows));
    return out;
}

Outcome run_fractal(const json& cfg, const fs::path& dir)
{
    Outcome out;
    FractalParams p;
    p.alpha = cfg.at("alpha");
    p.target_height = cfg.at("h");
    const auto b = build_fractal(p);
    const std::string format = cfg.at("format");
    emit(out, dir, sequence_name(format), sequence_bytes(b.sequence, format));
    emit(out, dir, "fractal.json", dump(fractal_report(p, b.sequence.size())));
    return out;
}

Outcome run_fbm(const json& cfg, const fs::path& dir)
{
    Outcome out;
    FbmParams p;
    p.hurst = cfg.at("H");
    p.grid_len = cfg.at("n");
    p.seed = cfg.at("seed");
    validate(p);
    Rng rng(derive_seed(p.seed, 0xfb70));
    const auto path = fbm_sample(p, rng);
    std::ostringstream csv;
    csv.precision(17);
    csv << "t,value\n0,0\n";
    for (std::size_t i = 0; i < path.size(); ++i) {
        csv << i + 1 << ',' << path[i] << '\n';
    }
    emit(out, dir, "fbm_path.csv", csv.str());
    const std::size_t window = cfg.at("window");
    const auto lags = cfg.at("lags").get<std::vector<std::size_t>>();
    const auto est = fbm_sign_predictor_sweep(p, window, lags, cfg.at("trials"), exec_of(cfg));
    json rows = json::array();
    for (const auto& e : est) {
        rows.push_back({{"s", e.lag}, {"estimate", e.estimate}, {"stderr", e.stderr},
                        {"closed_form", e.closed_form}, {"trials", e.trials}});
    }
    emit(out, dir, "fbm.json", dump({{"H", p.hurst}, {"n", p.grid_len}, {"seed", p.seed}, {"window", window},
                                     {"sign_predictor", rows}}));
    return out;
}

// Long-format sweep: one CSV row per (cell, metric).
struct SweepRow {
    std::string metric;
    double value = 0.0;
    double stderr = 0.0;
    std::size_t trials = 0;
};

std::vector<SweepRow> sweep_cell(const GeneratorSpec& spec, const std::vector<std::string>& metrics,
                                 std::size_t trials, std::size_t x_len, double alpha)
{
    std::vector<SweepRow> rows;
    for (const auto& m : metrics) {
        if (m == "deviation") {
            const std::uint64_t Ts[] = {spec.total_len};
            const auto& r = deviation_stats(spec, Ts, trials, Exec::Serial).rows.front();
            rows.push_back({"mean_dev", r.mean_dev, r.mean_se, trials});
            rows.push_back({"median_dev", r.median_dev, r.median_se, trials});
            rows.push_back({"rms_dev", r.rms_dev, 0.0, trials});
        } else if (m == "delta_hat") {
            const auto r = estimate_delta(spec, DeltaMode::Strict, trials, {}, Exec::Serial, true);
            rows.push_back({"delta_hat", r.delta_hat, 0.5 * (r.ci_hi - r.ci_lo), trials});
        } else if (m == "alpha_q") {
            const double a[] = {alpha};
            const auto r = alpha_q_estimate(spec, spec.total_len / 2, x_len, a, trials, {}, Exec::Serial);
            if (r.rows.empty()) {
                throw InfeasibleError("median deviation below floor");
            }
            rows.push_back({"q_hat", r.rows[0].q_hat, r.rows[0].stderr, trials});
        } else {
            throw ConfigError("metric must be deviation, delta_hat or alpha_q");
        }
    }
    return rows;
}

Outcome run_sweep(const json& cfg, const fs::path& dir)
{
    Outcome out;
    const auto families = cfg.at("families").get<std::vector<std::string>>();
    const auto deltas = cfg.at("deltas").get<std::vector<double>>();
    const auto Ts = cfg.at("T_list").get<std::vector<std::uint64_t>>();
    const auto metrics = cfg.at("metrics").get<std::vector<std::string>>();
    const std::uint64_t master = cfg.at("master_seed");
    const std::size_t trials = cfg.at("trials");
    const std::size_t x_len = cfg.at("x_len");
    const double alpha = cfg.at("alpha");

    struct Cell {
        GeneratorSpec spec;
        std::vector<SweepRow> rows;
        std::string error;
    };
    std::vector<Cell> cells;
    for (const auto& f : families) {
        for (double d : deltas) {
            for (auto T : Ts) {
                Cell c;
                c.spec.family = parse_family(f);
                c.spec.delta = d;
                c.spec.total_len = T;
                c.spec.k = cfg.value("k", 0.0);
                c.spec.seed = derive_seed(master, {static_cast<std::uint64_t>(c.spec.family),
                                                   std::bit_cast<std::uint64_t>(d), T});
                validate(c.spec);
                cells.push_back(std::move(c));
            }
        }
    }
    for (const auto& m : metrics) {
        if (m != "deviation" && m != "delta_hat" && m != "alpha_q") {
            throw ConfigError("metric must be deviation, delta_hat or alpha_q");
        }
    }

    // Cells are independent; each runs its analyses serially.
    const auto n = static_cast<std::int64_t>(cells.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
        auto& c = cells[static_cast<std::size_t>(i)];
        try {
            c.rows = sweep_cell(c.spec, metrics, trials, x_len, alpha);
        } catch (const std::exception& e) {
            c.error = e.what();
        }
    }

    std::ostringstream csv;
    csv.precision(17);
    csv << "family,delta,T,metric,value,stderr,trials,seed\n";
    json failures = json::array();
    for (const auto& c : cells) {
        if (!c.error.empty()) {
            failures.push_back({{"spec", to_json(c.spec)}, {"error", c.error}});
            continue;
        }
        for (const auto& r : c.rows) {
            csv << to_string(c.spec.family) << ',' << c.spec.delta << ',' << c.spec.total_len << ',' << r.metric
                << ',' << r.value << ',' << r.stderr << ',' << r.trials << ',' << c.spec.seed << '\n';
        }
    }
    emit(out, dir, "sweep.csv", csv.str());
    if (!failures.empty()) {
        emit(out, dir, "sweep_failures.json", dump(failures));
        out.code = kExitAnalysis;
    }
    return out;
}

Outcome run_verify(const json& cfg, const fs::path& dir)
{
    Outcome out;
    AcceptanceOptions o;
    o.quick = cfg.at("quick");
    o.seed = cfg.at("seed");
    o.only = cfg.at("only").get<std::vector<int>>();
    o.fault = parse_fault(cfg.at("inject_fault").get<std::string>());
    o.exec = exec_of(cfg);
    json report = json::array();
    bool all = true;
    for (const auto& r : run_acceptance(o, [](const CriterionResult& r) { std::cout << format_line(r) << std::endl; })) {
        all = all && r.passed;
        report.push_back(to_json(r));
    }
    emit(out, dir, "verify.json", dump({{"passed", all}, {"quick", o.quick}, {"criteria", report}}));
    out.code = all ? kExitOk : kExitAnalysis;
    return out;
}

using Runner = Outcome (*)(const json&, const fs::path&);

const std::map<std::string, Runner>& runners()
{
    static const std::map<std::string, Runner> m = {
        {"generate", run_generate}, {"stats", run_stats},   {"predict", run_predict}, {"inversion", run_inversion},
        {"alphaq", run_alphaq},     {"theta", run_theta},   {"fractal", run_fractal}, {"fbm", run_fbm},
        {"sweep", run_sweep},       {"verify", run_verify},
    };
    return m;
}

int execute(const std::string& command, const json& cfg, const fs::path& dir)
{
    if (cfg.contains("parallelism") && cfg.at("parallelism").get<int>() > 0) {
        set_worker_count(cfg.at("parallelism").get<int>());
    }
    fs::create_directories(dir);
    Outcome out = runners().at(command)(cfg, dir);
    json manifest = {{"command", command}, {"config", cfg}, {"outputs", out.outputs}, {"exit_code", out.code}};
    write_file_atomic(dir / (command + ".manifest.json"), dump(manifest));
    return out.code;
}

std::string default_output_dir()
{
    const char* env = std::getenv("FRACWALK_OUTPUT_DIR");
    return env && *env ? env : ".";
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"fracwalk: biased random walks, predictors and inversion analysis"};
    app.require_subcommand(0, 1);
    std::string output_dir = default_output_dir();
    std::string replay;
    int parallelism = 0;
    app.add_option("--output_dir", output_dir, "output directory (default $FRACWALK_OUTPUT_DIR or .)");
    app.add_option("--replay", replay, "rerun the config recorded in a manifest");
    app.add_option("--parallelism", parallelism, "worker threads (0: OpenMP default, 1: serial)");

    std::map<std::string, std::function<json()>> build;
    auto with_common = [&](json cfg) {
        cfg["parallelism"] = parallelism;
        return cfg;
    };

    SpecFlags gen_spec;
    std::string gen_format = "csv";
    auto* gen = app.add_subcommand("generate", "sample one sequence");
    gen_spec.add(gen);
    gen->add_option("--format", gen_format, "csv | binary");
    build["generate"] = [&] { return with_common({{"spec", gen_spec.to_json()}, {"format", gen_format}}); };

    SpecFlags st_spec;
    std::vector<std::uint64_t> st_T = {1024, 2048, 4096, 8192};
    std::size_t st_trials = 1000;
    auto* st = app.add_subcommand("stats", "deviation statistics over a list of T");
    st_spec.add(st, false);
    st->add_option("--T_list", st_T, "lengths");
    st->add_option("--trials", st_trials, "trials per T (>= 100)");
    build["stats"] = [&] {
        json s = st_spec.to_json();
        s["total_len"] = st_T.empty() ? 1 : st_T.front();
        return with_common({{"spec", s}, {"T_list", st_T}, {"trials", st_trials}});
    };

    SpecFlags pr_spec;
    std::string pr_name = "sign_of_prefix";
    std::vector<std::size_t> pr_I;
    std::size_t pr_window = 0, pr_trials = 1000, pr_block = 1;
    std::optional<std::int64_t> pr_lower, pr_upper;
    std::optional<double> pr_theta;
    double pr_alpha = 0.5;
    auto* pr = app.add_subcommand("predict", "run a predictor over sampled sequences");
    pr_spec.add(pr);
    pr->add_option("--predictor", pr_name, "sign_of_prefix | adaptive_bettor | weighted_majority | block_sign");
    pr->add_option("--I", pr_I, "target interval FIRST LAST (1-based, closed)")->expected(2)->required();
    pr->add_option("--window", pr_window, "history window for prefix predictors");
    pr->add_option("--lower_limit", pr_lower, "stop when payoff <= this");
    pr->add_option("--upper_limit", pr_upper, "stop when payoff >= this");
    pr->add_option("--theta", pr_theta, "adaptive bettor scale (default sqrt|I|)");
    pr->add_option("--alpha", pr_alpha, "adaptive bettor alpha");
    pr->add_option("--block", pr_block, "block_sign block length");
    pr->add_option("--trials", pr_trials, "trials");
    build["predict"] = [&] {
        json c = {{"spec", pr_spec.to_json()}, {"predictor", pr_name}, {"I", pr_I}, {"window", pr_window},
                  {"alpha", pr_alpha}, {"block", pr_block}, {"trials", pr_trials}};
        if (pr_lower) c["lower_limit"] = *pr_lower;
        if (pr_upper) c["upper_limit"] = *pr_upper;
        if (pr_theta) c["theta"] = *pr_theta;
        return with_common(c);
    };

    SpecFlags inv_spec;
    std::string inv_input;
    std::size_t inv_min_len = kDefaultMinLen;
    bool inv_dyadic = false;
    auto* inv = app.add_subcommand("inversion", "inversion ratio of a sequence file or a sampled sequence");
    inv_spec.add(inv);
    inv->add_option("--input", inv_input, "sequence file (csv or binary)");
    inv->add_option("--min_len", inv_min_len, "shortest interval X considered");
    inv->add_flag("--dyadic_only", inv_dyadic, "scan aligned intervals only");
    build["inversion"] = [&] {
        json c = {{"min_len", inv_min_len}, {"dyadic_only", inv_dyadic}};
        if (!inv_input.empty()) {
            c["input"] = fs::absolute(inv_input).string();
        } else {
            c["spec"] = inv_spec.to_json();
        }
        return with_common(c);
    };

    SpecFlags aq_spec;
    std::vector<std::size_t> aq_X;
    std::vector<double> aq_alphas = {0.1, 0.2};
    std::size_t aq_trials = 1000;
    bool aq_certify = false;
    unsigned aq_s = 4;
    std::optional<double> aq_theta;
    auto* aq = app.add_subcommand("alphaq", "(alpha, q)-inversion estimate on an interval X");
    aq_spec.add(aq);
    aq->add_option("--X", aq_X, "interval FIRST LAST (1-based, closed)")->expected(2)->required();
    aq->add_option("--alphas", aq_alphas, "alpha values");
    aq->add_option("--trials", aq_trials, "trials (>= 1000)");
    aq->add_flag("--certify", aq_certify, "also run the staged certificate");
    aq->add_option("--s", aq_s, "certificate stages");
    aq->add_option("--theta", aq_theta, "certificate threshold (default: median deviation)");
    build["alphaq"] = [&] {
        json c = {{"spec", aq_spec.to_json()}, {"X", aq_X}, {"alphas", aq_alphas}, {"trials", aq_trials},
                  {"certify", aq_certify}, {"s", aq_s}};
        if (aq_theta) c["theta"] = *aq_theta;
        return with_common(c);
    };

    std::vector<double> th_alpha = {0.0, 0.1, 0.2, 1.0 / 3.0, 0.5};
    auto* th = app.add_subcommand("theta", "solve the fractal exponent equation");
    th->add_option("--alpha", th_alpha, "alpha values in [0, 1/2]");
    build["theta"] = [&] { return with_common({{"alpha", th_alpha}}); };

    double fr_alpha = 1.0 / 3.0;
    std::int64_t fr_h = 1024;
    std::string fr_format = "csv";
    auto* fr = app.add_subcommand("fractal", "build the deterministic inverting sequence");
    fr->set_help_flag("--help", "print this help message and exit");
    fr->add_option("--alpha", fr_alpha, "inversion parameter");
    fr->add_option("--h", fr_h, "target height");
    fr->add_option("--format", fr_format, "csv | binary");
    build["fractal"] = [&] { return with_common({{"alpha", fr_alpha}, {"h", fr_h}, {"format", fr_format}}); };

    double fb_H = 0.6;
    std::size_t fb_n = 144, fb_window = 16, fb_trials = 100000;
    std::vector<std::size_t> fb_lags = {1, 2, 4, 8};
    std::uint64_t fb_seed = 0;
    auto* fb = app.add_subcommand("fbm", "fractional Brownian motion path and sign predictor");
    fb->add_option("--H", fb_H, "Hurst parameter");
    fb->add_option("--n", fb_n, "grid length");
    fb->add_option("--window", fb_window, "predicted window x");
    fb->add_option("--lags", fb_lags, "lags s");
    fb->add_option("--trials", fb_trials, "paths");
    fb->add_option("--seed", fb_seed, "seed");
    build["fbm"] = [&] {
        return with_common({{"H", fb_H}, {"n", fb_n}, {"window", fb_window}, {"lags", fb_lags},
                            {"trials", fb_trials}, {"seed", fb_seed}});
    };

    std::vector<std::string> sw_families = {"uniform"};
    std::vector<double> sw_deltas = {0.0};
    std::vector<std::uint64_t> sw_T = {1024};
    std::vector<std::string> sw_metrics = {"deviation"};
    std::uint64_t sw_seed = 0;
    std::size_t sw_trials = 1000, sw_x_len = 256;
    double sw_alpha = 0.2, sw_k = 0.0;
    auto* sw = app.add_subcommand("sweep", "grid of (family, delta, T) cells to a long CSV");
    sw->add_option("--families", sw_families, "families");
    sw->add_option("--deltas", sw_deltas, "delta values");
    sw->add_option("--T_list", sw_T, "lengths");
    sw->add_option("--metrics", sw_metrics, "deviation | delta_hat | alpha_q");
    sw->add_option("--master_seed", sw_seed, "master seed; cell seeds derive from it and the cell coordinates");
    sw->add_option("--trials", sw_trials, "trials per cell");
    sw->add_option("--x_len", sw_x_len, "alpha_q interval length (X starts at T/2)");
    sw->add_option("--alpha", sw_alpha, "alpha_q alpha");
    sw->add_option("--k", sw_k, "entropy_conditioned k");
    build["sweep"] = [&] {
        return with_common({{"families", sw_families}, {"deltas", sw_deltas}, {"T_list", sw_T},
                            {"metrics", sw_metrics}, {"master_seed", sw_seed}, {"trials", sw_trials},
                            {"x_len", sw_x_len}, {"alpha", sw_alpha}, {"k", sw_k}});
    };

    bool vf_quick = false;
    std::string vf_fault = "none";
    std::vector<int> vf_only;
    std::uint64_t vf_seed = AcceptanceOptions{}.seed;
    auto* vf = app.add_subcommand("verify", "run the acceptance criteria");
    vf->add_flag("--quick", vf_quick, "reduced trial counts, widened tolerances");
    vf->add_option("--inject_fault", vf_fault, "none | ignore_delta");
    vf->add_option("--only", vf_only, "criterion ids");
    vf->add_option("--seed", vf_seed, "master seed");
    build["verify"] = [&] {
        return with_common({{"quick", vf_quick}, {"inject_fault", vf_fault}, {"only", vf_only}, {"seed", vf_seed}});
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (!replay.empty()) {
            std::ifstream in(replay);
            if (!in) {
                throw ConfigError("cannot open manifest " + replay);
            }
            json manifest;
            try {
                in >> manifest;
            } catch (const json::exception& e) {
                throw FormatError(std::string("manifest is not JSON: ") + e.what());
            }
            const std::string command = manifest.at("command");
            if (!runners().count(command)) {
                throw ConfigError("manifest names unknown command " + command);
            }
            return execute(command, manifest.at("config"), output_dir);
        }
        const auto subs = app.get_subcommands();
        if (subs.empty()) {
            std::cout << app.help();
            return kExitConfig;
        }
        const std::string command = subs.front()->get_name();
        return execute(command, build.at(command)(), output_dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "analysis failure: " << e.what() << "\n";
        return kExitAnalysis;
    }
}
