#include "scbm/checkpoint.hpp"

#include <json.hpp>

#include "scbm/container_io.hpp"

namespace scbm::io {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'S', 'C', 'B', 'M'};
constexpr std::uint32_t kVersion = 1;

json encoder_to_json(const nn::EncoderConfig& cfg) {
    json convs = json::array();
    for (const auto& c : cfg.convs)
        convs.push_back({{"filters", c.filters}, {"kernel", c.kernel}, {"stride", c.stride}});
    return {{"in_h", cfg.in_h}, {"in_w", cfg.in_w},   {"in_c", cfg.in_c},
            {"convs", convs},   {"pool", cfg.pool},   {"dense", cfg.dense}};
}

nn::EncoderConfig encoder_from_json(const json& j) {
    nn::EncoderConfig cfg;
    cfg.in_h = j.at("in_h");
    cfg.in_w = j.at("in_w");
    cfg.in_c = j.at("in_c");
    cfg.convs.clear();
    for (const auto& c : j.at("convs"))
        cfg.convs.push_back({c.at("filters"), c.at("kernel"), c.at("stride")});
    cfg.pool = j.at("pool");
    cfg.dense = j.at("dense").get<std::vector<std::size_t>>();
    return cfg;
}

json spec_to_json(const model::ModelSpec& spec) {
    json j;
    j["architecture"] = model::to_string(spec.arch);
    j["head"] = model::to_string(spec.head.kind);
    j["background_size"] = spec.head.background_size;
    j["bandwidth"] = spec.head.bandwidth == model::BandwidthMode::PerValue ? "per-value" : "scalar";
    j["tau"] = spec.head.tau;
    j["embedding_dim"] = spec.embedding_dim;
    j["concept_head_hidden"] = spec.concept_head_hidden;
    j["encoder"] = encoder_to_json(spec.encoder);
    if (spec.uses_concepts()) {
        j["schema_names"] = spec.schema.names;
        j["schema_cardinalities"] = spec.schema.cardinalities;
    }
    return j;
}

model::ModelSpec spec_from_json(const json& j) {
    model::ModelSpec spec;
    spec.arch = model::architecture_from_string(j.at("architecture"));
    spec.head.kind = model::head_from_string(j.at("head"));
    spec.head.background_size = j.at("background_size");
    spec.head.bandwidth = j.at("bandwidth") == "per-value" ? model::BandwidthMode::PerValue
                                                           : model::BandwidthMode::Scalar;
    spec.head.tau = j.at("tau");
    spec.embedding_dim = j.at("embedding_dim");
    spec.concept_head_hidden = j.at("concept_head_hidden");
    spec.encoder = encoder_from_json(j.at("encoder"));
    if (spec.uses_concepts())
        spec.schema = ConceptSchema(j.at("schema_names").get<std::vector<std::string>>(),
                                    j.at("schema_cardinalities").get<std::vector<std::size_t>>());
    return spec;
}

}  // namespace

void save_checkpoint(const model::TrainedModel& model, const std::string& path, std::uint64_t seed,
                     const std::string& config_hash) {
    ArrayContainer c;
    c.version = kVersion;

    json meta;
    meta["spec"] = spec_to_json(model.spec);
    meta["seed"] = seed;
    meta["config_hash"] = config_hash;
    json trainable = json::array();
    json param_names = json::array();
    for (const auto& name : model.params.names()) {
        param_names.push_back(name);
        trainable.push_back(model.params.trainable(name));
    }
    meta["param_names"] = param_names;
    meta["param_trainable"] = trainable;
    c.meta_json = meta.dump();

    for (const auto& name : model.params.names()) c.put("param:" + name, model.params.value(name));

    if (model.spec.head.kind == model::HeadKind::Cox) {
        c.put("baseline.knots", Tensor::row(model.baseline.knots()));
        c.put("baseline.values", Tensor::row(model.baseline.values()));
    } else {
        c.put("background.rep", model.background_rep);
        std::vector<double> times(model.background_events.size());
        std::vector<double> events(model.background_events.size());
        for (std::size_t i = 0; i < model.background_events.size(); ++i) {
            times[i] = model.background_events[i].time;
            events[i] = model.background_events[i].event ? 1.0 : 0.0;
        }
        c.put("background.time", Tensor::row(times));
        c.put("background.event", Tensor::row(events));
    }

    std::vector<double> lt, ls, lc, lk;
    for (const auto& e : model.log) {
        lt.push_back(e.total);
        ls.push_back(e.surv);
        lc.push_back(e.ce);
        lk.push_back(static_cast<double>(e.surv_skipped));
    }
    c.put("log.total", Tensor::row(lt.empty() ? std::vector<double>{} : lt));
    c.put("log.surv", Tensor::row(ls));
    c.put("log.ce", Tensor::row(lc));
    c.put("log.skipped", Tensor::row(lk));

    write_container(path, kMagic, c);
}

model::TrainedModel load_checkpoint(const std::string& path) {
    const ArrayContainer c = read_container(path, kMagic, kVersion);
    json meta;
    try {
        meta = json::parse(c.meta_json);
    } catch (const json::exception& e) {
        throw std::runtime_error("corrupt checkpoint " + path + ": metadata block (" + e.what() + ")");
    }

    model::TrainedModel model;
    try {
        model.spec = spec_from_json(meta.at("spec"));
    } catch (const json::exception& e) {
        throw std::runtime_error("corrupt checkpoint " + path + ": spec field (" + e.what() + ")");
    }

    const auto names = meta.at("param_names").get<std::vector<std::string>>();
    const auto trainable = meta.at("param_trainable").get<std::vector<bool>>();
    if (names.size() != trainable.size())
        throw std::runtime_error("corrupt checkpoint " + path + ": param_trainable field");
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (!c.has("param:" + names[i]))
            throw std::runtime_error("corrupt checkpoint " + path + ": missing array param:" + names[i]);
        model.params.add(names[i], c.get("param:" + names[i]), trainable[i]);
    }

    if (model.spec.head.kind == model::HeadKind::Cox) {
        model.baseline = surv::StepSurvivalFunction(c.get("baseline.knots").vec(),
                                                    c.get("baseline.values").vec());
    } else {
        model.background_rep = c.get("background.rep");
        const auto& times = c.get("background.time").vec();
        const auto& events = c.get("background.event").vec();
        if (times.size() != events.size() || times.size() != model.background_rep.dim(0))
            throw std::runtime_error("corrupt checkpoint " + path + ": background arrays");
        model.background_events.resize(times.size());
        for (std::size_t i = 0; i < times.size(); ++i)
            model.background_events[i] = {times[i], events[i] != 0.0};
    }

    const auto& lt = c.get("log.total").vec();
    const auto& ls = c.get("log.surv").vec();
    const auto& lc = c.get("log.ce").vec();
    const auto& lk = c.get("log.skipped").vec();
    for (std::size_t i = 0; i < lt.size(); ++i)
        model.log.push_back({lt[i], ls[i], lc[i], static_cast<std::size_t>(lk[i])});
    return model;
}

}  // namespace scbm::io
