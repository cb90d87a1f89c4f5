#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace scbm {

/// Categorical concept layout: m named concepts, concept i taking one of
/// cardinality[i] >= 2 values. M is the total logit width.
struct ConceptSchema {
    std::vector<std::string> names;
    std::vector<std::size_t> cardinalities;

    ConceptSchema() = default;
    ConceptSchema(std::vector<std::string> n, std::vector<std::size_t> k)
        : names(std::move(n)), cardinalities(std::move(k)) {
        if (names.size() != cardinalities.size())
            throw std::invalid_argument("ConceptSchema: names/cardinalities length mismatch");
        if (names.empty()) throw std::invalid_argument("ConceptSchema: at least one concept required");
        for (std::size_t k_i : cardinalities)
            if (k_i < 2) throw std::invalid_argument("ConceptSchema: every cardinality must be >= 2");
    }

    std::size_t concept_count() const { return names.size(); }

    std::size_t total_width() const {
        return std::accumulate(cardinalities.begin(), cardinalities.end(), std::size_t{0});
    }

    /// Offset of concept i's block within the concatenated logit vector.
    std::size_t block_offset(std::size_t i) const {
        std::size_t off = 0;
        for (std::size_t j = 0; j < i; ++j) off += cardinalities[j];
        return off;
    }

    bool operator==(const ConceptSchema& o) const {
        return names == o.names && cardinalities == o.cardinalities;
    }
    bool operator!=(const ConceptSchema& o) const { return !(*this == o); }
};

/// Concatenated per-concept logit blocks; block i has length k_i.
struct ConceptLogits {
    ConceptSchema schema;
    std::vector<std::vector<double>> blocks;

    ConceptLogits() = default;
    ConceptLogits(ConceptSchema s, std::vector<std::vector<double>> b)
        : schema(std::move(s)), blocks(std::move(b)) {
        if (blocks.size() != schema.concept_count())
            throw std::invalid_argument("ConceptLogits: block count mismatch");
        for (std::size_t i = 0; i < blocks.size(); ++i)
            if (blocks[i].size() != schema.cardinalities[i])
                throw std::invalid_argument("ConceptLogits: block " + std::to_string(i) + " length mismatch");
    }

    std::vector<double> concatenated() const {
        std::vector<double> out;
        out.reserve(schema.total_width());
        for (const auto& b : blocks) out.insert(out.end(), b.begin(), b.end());
        return out;
    }

    std::vector<int> argmax_values() const {
        std::vector<int> out(blocks.size(), 0);
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < blocks[i].size(); ++j)
                if (blocks[i][j] > blocks[i][best]) best = j;
            out[i] = static_cast<int>(best);
        }
        return out;
    }
};

/// Kernel bandwidth per concept value, aligned with a schema; all entries
/// strictly positive.
struct PerValueBandwidths {
    std::vector<std::vector<double>> tau;  // tau[i][j] for concept i, value j

    static PerValueBandwidths constant(const ConceptSchema& schema, double value) {
        PerValueBandwidths out;
        out.tau.resize(schema.concept_count());
        for (std::size_t i = 0; i < schema.concept_count(); ++i)
            out.tau[i].assign(schema.cardinalities[i], value);
        return out;
    }

    bool matches(const ConceptSchema& schema) const {
        if (tau.size() != schema.concept_count()) return false;
        for (std::size_t i = 0; i < tau.size(); ++i)
            if (tau[i].size() != schema.cardinalities[i]) return false;
        return true;
    }
};

}  // namespace scbm
