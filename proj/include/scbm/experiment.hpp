#pragma once

#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scbm/config.hpp"
#include "scbm/datagen.hpp"
#include "scbm/models.hpp"

namespace scbm::exp {

enum class SweepAxis { SampleSize, UncensoredProportion };

struct ModelChoice {
    model::Architecture arch;
    model::HeadKind head;
    std::string id() const { return model::to_string(arch) + ":" + model::to_string(head); }
};

struct ExperimentConfig {
    data::DatasetKind kind = data::DatasetKind::Mnist;
    SweepAxis axis = SweepAxis::SampleSize;
    std::vector<double> grid = {200, 500, 1000, 2000};
    double fixed_value = 0.33;  // the non-swept axis: rho for n-sweeps, n for rho-sweeps
    std::size_t reps = 10;
    double test_fraction = 0.4;
    std::vector<ModelChoice> models;

    model::TrainConfig train;      // per-job seed derived, field ignored
    data::GenerationConfig gen;    // rho and seed overwritten per cell
    nn::EncoderConfig encoder;
    std::size_t embedding_dim = 32;
    std::size_t head_hidden = 32;
    std::size_t background = 128;
    double tau = 1.0;
    model::BandwidthMode bandwidth = model::BandwidthMode::Scalar;

    std::size_t pool_categories = 10;
    std::size_t pool_per_category = 200;

    std::uint64_t seed = 42;
    std::size_t threads = 1;
    bool timing = false;  // off by default so outputs stay byte-reproducible

    void validate() const;
    model::ModelSpec model_spec(const ModelChoice& choice, const ConceptSchema& schema) const;
};

struct MetricsRow {
    std::string model;
    std::string head;
    std::string axis;  // "n" or "rho"
    double axis_value = 0.0;
    std::size_t rep = 0;
    bool ok = false;
    std::string error;
    double c_index = 0.0;
    std::optional<double> f1_mean;
    std::vector<double> f1_per_concept;
    double wall_time_s = 0.0;
};

struct SummaryRow {
    std::string model, head, axis;
    double axis_value = 0.0;
    std::size_t n_ok = 0, n_failed = 0;
    double c_index_mean = 0.0, c_index_std = 0.0;
    double f1_mean = 0.0, f1_std = 0.0;
    bool has_f1 = false;
};

struct ExperimentResults {
    std::vector<MetricsRow> rows;
    std::vector<SummaryRow> summary;
};

extern const char* kResultsCsvHeader;

/// Runs grid x repetitions x models. Every repetition is an independent job
/// (data generation, split, fits, evaluation) keyed by (axis index, rep);
/// jobs may run on a worker pool and merge deterministically.
/// Per-row failures are recorded with an error tag; the run continues.
ExperimentResults run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// True if every repetition of some (model, axis value) cell failed.
bool any_cell_fully_failed(const ExperimentResults& results);

std::vector<SummaryRow> summarize(const std::vector<MetricsRow>& rows);

std::string results_to_csv(const std::vector<MetricsRow>& rows);
std::string summary_to_csv(const std::vector<SummaryRow>& summary);
std::vector<MetricsRow> parse_results_csv(const std::string& text);

/// One CSV per metric plus optional SVG line charts (mean +- std per model).
void export_reports(const std::vector<MetricsRow>& rows, const std::string& out_dir, bool svg);

/// Keys accepted in experiment config files; unknown keys are rejected.
const std::set<std::string>& allowed_config_keys();

ExperimentConfig experiment_from_config(const cfg::Config& c);

/// Shared pieces also used by the train/generate subcommands.
data::SourcePool pool_from_config(const cfg::Config& c, std::uint64_t seed,
                                  data::DatasetKind kind);
data::GenerationConfig generation_from_config(const cfg::Config& c, data::DatasetKind kind);
nn::EncoderConfig encoder_from_config(const cfg::Config& c, std::size_t in_h, std::size_t in_w,
                                      std::size_t in_c);
model::TrainConfig train_from_config(const cfg::Config& c);
data::DatasetKind dataset_kind_from_string(const std::string& s);

}  // namespace scbm::exp
