#include "scbm/dataset_io.hpp"

#include <json.hpp>

#include "scbm/container_io.hpp"

namespace scbm::io {

using nlohmann::json;

namespace {
constexpr char kMagic[4] = {'S', 'C', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_dataset(const data::ConceptSurvivalDataset& ds, const std::string& path) {
    ds.validate();
    if (ds.size() == 0) throw std::invalid_argument("save_dataset: empty dataset");

    ArrayContainer c;
    c.version = kVersion;
    json meta;
    meta["schema_names"] = ds.schema.names;
    meta["schema_cardinalities"] = ds.schema.cardinalities;
    c.meta_json = meta.dump();

    const Tensor& first = ds.images.front();
    Tensor images({ds.size(), first.dim(0), first.dim(1), first.dim(2)});
    const std::size_t per = first.size();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (!ds.images[i].same_shape(first))
            throw std::invalid_argument("save_dataset: mixed image shapes");
        std::copy(ds.images[i].vec().begin(), ds.images[i].vec().end(),
                  images.vec().begin() + i * per);
    }
    c.put("images", std::move(images));

    const std::size_t m = ds.schema.concept_count();
    Tensor concepts({ds.size(), m});
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t j = 0; j < m; ++j) concepts.at2(i, j) = ds.concepts[i][j];
    c.put("concepts", std::move(concepts));

    Tensor times({ds.size(), 1});
    Tensor events({ds.size(), 1});
    for (std::size_t i = 0; i < ds.size(); ++i) {
        times[i] = ds.times[i];
        events[i] = ds.events[i] ? 1.0 : 0.0;
    }
    c.put("times", std::move(times));
    c.put("events", std::move(events));
    write_container(path, kMagic, c);
}

data::ConceptSurvivalDataset load_dataset(const std::string& path) {
    const ArrayContainer c = read_container(path, kMagic, kVersion);
    json meta;
    try {
        meta = json::parse(c.meta_json);
    } catch (const json::exception& e) {
        throw std::runtime_error("corrupt dataset " + path + ": metadata block (" + e.what() + ")");
    }

    data::ConceptSurvivalDataset ds;
    ds.schema = ConceptSchema(meta.at("schema_names").get<std::vector<std::string>>(),
                              meta.at("schema_cardinalities").get<std::vector<std::size_t>>());

    const Tensor& images = c.get("images");
    if (images.ndim() != 4) throw std::runtime_error("corrupt dataset " + path + ": images array");
    const std::size_t n = images.dim(0);
    const std::size_t per = images.dim(1) * images.dim(2) * images.dim(3);
    ds.images.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Tensor img({images.dim(1), images.dim(2), images.dim(3)});
        std::copy(images.vec().begin() + i * per, images.vec().begin() + (i + 1) * per,
                  img.vec().begin());
        ds.images.push_back(std::move(img));
    }

    const Tensor& concepts = c.get("concepts");
    if (concepts.ndim() != 2 || concepts.dim(0) != n)
        throw std::runtime_error("corrupt dataset " + path + ": concepts array");
    ds.concepts.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds.concepts[i].resize(concepts.dim(1));
        for (std::size_t j = 0; j < concepts.dim(1); ++j)
            ds.concepts[i][j] = static_cast<int>(concepts.at2(i, j));
    }

    const Tensor& times = c.get("times");
    const Tensor& events = c.get("events");
    if (times.size() != n || events.size() != n)
        throw std::runtime_error("corrupt dataset " + path + ": times/events arrays");
    ds.times.assign(times.vec().begin(), times.vec().end());
    ds.events.resize(n);
    for (std::size_t i = 0; i < n; ++i) ds.events[i] = events[i] != 0.0;

    ds.validate();
    return ds;
}

}  // namespace scbm::io
