// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "falcon/analog.hpp"
#include "falcon/falcon.hpp"
#include "falcon/serialize.hpp"
#include "falcon/wmmse.hpp"

namespace falcon {

/// Malformed or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Feasibility, Convergence, RateRegion, HybridCompare, Timing };

std::string to_string(ExperimentKind kind);
/// Accepts the config spelling (rate_region) and the CLI spelling (rate-region, converge).
ExperimentKind parse_experiment(const std::string& name);

/// "falcon" or "wmmse:<MRT|ZF|SLNR>[:<fraction>]". A WMMSE entry without a
/// fraction is expanded over ExperimentConfig::p_m0_list.
struct MethodSpec {
    bool falcon = true;
    InitMethod init = InitMethod::MRT;
    std::optional<double> p_m0_fraction;

    std::string label() const;
};
MethodSpec parse_method(const std::string& text);

/// "fd", "pb:<l_tx>" or "cb:<codebook_size>:<l_tx>".
struct PrecoderSpec {
    AnalogMode mode = AnalogMode::FullyDigital;
    int l_tx = 16;
    int codebook_size = 128;

    std::string label() const;  // FD, PB16, CB128x16
};
PrecoderSpec parse_precoder(const std::string& text);

struct Variant {
    PrecoderSpec precoder;
    MethodSpec method;

    std::string label() const;  // "<precoder>|<method>"
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Feasibility;

    // scenario
    int n_tx = 4;
    int k_users = 2;
    double c0_min = 2.5;  // bps/Hz
    double p_tx_dbm = 50.0;
    double sigma2_dbm = 30.0;
    std::vector<double> weights;  // empty: all ones
    int n_paths = 8;

    // what to run; variants is precoders x methods unless given explicitly
    std::vector<PrecoderSpec> precoders{PrecoderSpec{}};
    std::vector<MethodSpec> methods{MethodSpec{}};
    std::vector<Variant> variants;
    std::vector<SplitMode> modes{SplitMode::RS};
    std::uint64_t codebook_seed = 0x5eed;

    int trials = 100;
    std::uint64_t seed_base = 1;
    int threads = 1;
    int max_iters = 60;
    double eps = 1e-4;
    double max_gram_condition = 1e10;
    bool record_traces = false;

    // sweeps
    std::vector<double> thetas;  // rate_region, radians
    int weight_points = 41;      // rate_region, log-spaced mu1/mu2 ratios
    double ratio_min = 1e-2;
    double ratio_max = 1e2;
    std::vector<int> k_list;     // hybrid_compare, timing
    std::vector<double> p_m0_list{0.70, 0.80, 0.90, 0.95, 0.99};

    double p_tx() const { return dbm_to_mw(p_tx_dbm); }
    double sigma2() const { return dbm_to_mw(sigma2_dbm); }
    /// K values the experiment iterates over.
    std::vector<int> k_values() const;
    /// Variants with WMMSE fractions expanded.
    std::vector<Variant> expanded_variants() const;
    std::vector<double> weight_ratios() const;
    /// Throws ConfigError.
    void validate() const;
};

/// Default scenario for each study.
ExperimentConfig default_config(ExperimentKind kind);

/**
 * INI file with sections [experiment], [scenario], [precoder], [methods] and
 * [sweep]. Values start from default_config(kind) and are overridden key by
 * key. Lists are comma separated; angles accept "pi/9" style fractions.
 */
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& ini_text);

Json to_json(const ExperimentConfig& config);

struct TrialRow {
    std::string precoder;
    std::string method;
    std::string mode;
    int k_users = 0;
    double theta = 0.0;         // rate_region only
    double weight_ratio = 0.0;  // rate_region only, mu1 / mu2
    int trial = 0;
    std::uint64_t seed = 0;
    std::string status;
    bool feasible = false;
    bool discarded = false;  // hybrid analog with ill-conditioned F^H F (not in rate_region)
    double wsr = 0.0;
    int iterations = 0;
    double time_s = 0.0;
    double rank_residual_max = 0.0;
    double relaxation_gap = 0.0;
    std::vector<double> weights;
    std::vector<double> unicast_rate;
    std::vector<double> trace;  // only with record_traces
};

/**
 * Aggregates over rows sharing (precoder, method, mode, K, theta).
 * feasibility_pct counts non-discarded runs; wsr, iteration and time
 * statistics use feasible runs.
 * The "common" mean restricts to trials feasible for every variant and mode
 * of the same (K, theta, weight_ratio) group.
 */
struct SummaryRow {
    std::string precoder;
    std::string method;
    std::string mode;
    int k_users = 0;
    double theta = 0.0;
    int runs = 0;
    int discarded = 0;
    int feasible = 0;
    double feasibility_pct = 0.0;
    double mean_wsr = 0.0;
    double median_wsr = 0.0;
    int common_runs = 0;
    double mean_wsr_common = 0.0;
    double mean_iterations = 0.0;
    double mean_time_s = 0.0;
};

struct RunRecord {
    ExperimentConfig config;
    std::vector<TrialRow> trials;
    std::vector<SummaryRow> summary;
    double wall_time_s = 0.0;
};

std::vector<SummaryRow> summarize(const std::vector<TrialRow>& rows);

/// Runs every task of the experiment on config.threads workers. Row order is fixed by the config.
RunRecord run_experiment(const ExperimentConfig& config, std::ostream* progress = nullptr);

RunRecord exp_feasibility(const ExperimentConfig& config, std::ostream* progress = nullptr);
RunRecord exp_convergence(const ExperimentConfig& config, std::ostream* progress = nullptr);
RunRecord exp_rate_region(const ExperimentConfig& config, std::ostream* progress = nullptr);
RunRecord exp_hybrid_compare(const ExperimentConfig& config, std::ostream* progress = nullptr);
RunRecord exp_timing(const ExperimentConfig& config, std::ostream* progress = nullptr);

/// Analog precoder of a variant for one channel realization.
AnalogPrecoder make_analog(const PrecoderSpec& spec, const ChannelSet& channels,
                           std::uint64_t codebook_seed);

/// One method on one instance; feasibility is judged by the caller.
RsSolution run_method(const MethodSpec& method, const ChannelSet& channels,
                      const AnalogPrecoder& analog, const std::vector<double>& weights,
                      double c0_min, double p_tx, double sigma2, const FalconConfig& solver);

/// Converged or IterationCap with every slack >= -1e-6.
bool counts_feasible(const RsSolution& sol);

void write_trials_csv(std::ostream& os, const std::vector<TrialRow>& rows);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);
void write_traces_csv(std::ostream& os, const std::vector<TrialRow>& rows);
/// theta, precoder, mode, mu1, mu2, R1, R2, wsr, status for rate-region rows.
void write_region_csv(std::ostream& os, const std::vector<TrialRow>& rows);

Json to_json(const TrialRow& row);
Json to_json(const SummaryRow& row);
Json meta_json(const RunRecord& record);

/**
 * csv: <stem>_trials.csv, <stem>_summary.csv, <stem>_traces.csv (when traces
 * were recorded), <stem>_region.csv (rate region) and <stem>_meta.json.
 * json: a single <stem>.json. Returns the files written.
 */
std::vector<std::filesystem::path> write_outputs(const RunRecord& record,
                                                 const std::filesystem::path& out_dir,
                                                 const std::string& format);

/// Git revision baked in at configure time, "unknown" outside a checkout.
std::string build_revision();

}  // namespace falcon
