#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scbm/concept_schema.hpp"
#include "scbm/surv_core.hpp"
#include "scbm/tensor.hpp"

namespace scbm::data {

struct CategoryTags {
    bool animal = false;
    bool vehicle = false;
    bool flying = false;
    bool cat = false;
};

/// Source images with category labels; tags are optional per-category
/// semantic attributes used by the cifar-style composer.
struct SourcePool {
    std::vector<Tensor> images;  // uniform (H,W,C), values in [0,1]
    std::vector<int> labels;
    std::size_t category_count = 0;
    std::vector<CategoryTags> tags;  // empty when the pool is untagged
};

enum class ConceptEncoding { Integer, OneHot };
enum class TimeLaw { Weibull, WeibullSin };
enum class DatasetKind { Mnist, MnistSin, CifarStyle };

/// Event-time generation parameters. With Integer encoding the risk term is
/// b^T c over raw concept values (b has length m). With OneHot encoding b has
/// one coefficient per concept value and the risk term is
/// sum_i b[offset_i + c_i] * c_i, so a value's contribution scales with both
/// its coefficient and the value itself.
struct GenerationConfig {
    ConceptEncoding encoding = ConceptEncoding::Integer;
    std::vector<double> coefficients;
    double nu = 2.0;
    double lambda = 1e-4;
    TimeLaw law = TimeLaw::Weibull;
    double uncensored_rho = 0.33;  // in (0,1]
    std::uint64_t seed = 0;
};

struct ConceptSurvivalDataset {
    std::vector<Tensor> images;
    std::vector<std::vector<int>> concepts;  // n rows of m values
    std::vector<double> times;
    std::vector<bool> events;
    ConceptSchema schema;

    std::size_t size() const { return images.size(); }
    void validate() const;
    std::vector<surv::EventSample> event_samples() const;
    ConceptSurvivalDataset subset(const std::vector<std::size_t>& indices) const;
};

/// Parse an IDX image/label file pair (big-endian magics 2051/2049,
/// unsigned-byte pixels scaled to [0,1]).
SourcePool load_idx_pool(const std::string& images_path, const std::string& labels_path);

/// Deterministic 28x28 glyph pool: one stroke pattern per category plus
/// seeded pixel noise and jitter. Stands in for downloaded image data so the
/// whole suite runs offline.
SourcePool synth_glyph_pool(std::size_t categories, std::size_t per_category, std::uint64_t seed);

/// Attach the 10-category semantic tag table (animals, vehicles, flying
/// things, one cat category) to a pool with exactly 10 categories.
void tag_pool_cifar_style(SourcePool& pool);

struct Composite {
    std::vector<Tensor> images;
    std::vector<std::vector<int>> concepts;
    ConceptSchema schema;
};

/// 2x2 tiles of four pairwise-distinct categories; concept i is the category
/// of tile i.
Composite compose_mnist_style(const SourcePool& pool, std::size_t n, std::uint64_t seed);

/// 2x2 tiles, concepts = (animal count, vehicle count, flying count,
/// cat present) with cardinalities (5,5,5,2).
Composite compose_cifar_style(const SourcePool& pool, std::size_t n, std::uint64_t seed);

std::vector<double> generate_event_times(const std::vector<std::vector<int>>& concepts,
                                         const ConceptSchema& schema, const GenerationConfig& cfg);

/// Independent Bernoulli(rho) event indicators; recorded times are left
/// untouched.
std::vector<bool> apply_censoring(const std::vector<double>& times, double rho, std::uint64_t seed);

ConceptSurvivalDataset build_dataset(DatasetKind kind, const SourcePool& pool, std::size_t n,
                                     const GenerationConfig& cfg);

/// Generation presets for the three dataset kinds.
GenerationConfig default_generation(DatasetKind kind);
/// One-hot block presets used for the explanation experiments.
GenerationConfig onehot_mnist_generation();
GenerationConfig onehot_cifar_generation();

}  // namespace scbm::data
