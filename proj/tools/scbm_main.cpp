#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "scbm/checkpoint.hpp"
#include "scbm/config.hpp"
#include "scbm/dataset_io.hpp"
#include "scbm/experiment.hpp"
#include "scbm/interpret.hpp"
#include "scbm/kernels.hpp"
#include "scbm/svg_report.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace scbm;

struct GlobalOpts {
    std::string config_path;
    std::string out_dir = "out";
    unsigned long long seed = 0;
    bool seed_set = false;
    int threads = 0;
    bool svg = false;
};

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << content;
}

cfg::Config load_config(const GlobalOpts& g) {
    if (g.config_path.empty()) throw std::runtime_error("--config is required for this subcommand");
    cfg::Config c = cfg::Config::parse_file(g.config_path);
    c.require_known(exp::allowed_config_keys());
    return c;
}

std::uint64_t effective_seed(const GlobalOpts& g, const cfg::Config& c) {
    return g.seed_set ? g.seed : c.get_u64("seed", 42);
}

data::ConceptSurvivalDataset dataset_from_config(const cfg::Config& c, std::uint64_t seed) {
    const data::DatasetKind kind = exp::dataset_kind_from_string(c.get_str("dataset.kind", "mnist"));
    data::SourcePool pool = exp::pool_from_config(c, mix64(seed, 0xA001), kind);
    data::GenerationConfig gen = exp::generation_from_config(c, kind);
    gen.seed = mix64(seed, 0xA002);
    return data::build_dataset(kind, pool, c.get_size("dataset.n", 1000), gen);
}

model::ModelSpec spec_from_config(const cfg::Config& c, const data::ConceptSurvivalDataset& ds) {
    model::ModelSpec spec;
    spec.arch = model::architecture_from_string(c.get_str("model.architecture", "survcbm"));
    spec.head.kind = model::head_from_string(c.get_str("model.head", "cox"));
    spec.schema = ds.schema;
    const Tensor& img = ds.images.front();
    spec.encoder = exp::encoder_from_config(c, img.dim(0), img.dim(1), img.dim(2));
    spec.embedding_dim = c.get_size("model.embedding_dim", 32);
    spec.concept_head_hidden = c.get_size("model.head_hidden", 32);
    spec.head.background_size = c.get_size("model.background", 128);
    spec.head.tau = c.get_double("model.tau", 1.0);
    const std::string bw = c.get_str("model.bandwidth", "scalar");
    spec.head.bandwidth = bw == "per-value" ? model::BandwidthMode::PerValue
                                            : model::BandwidthMode::Scalar;
    return spec;
}

int cmd_generate(const GlobalOpts& g) {
    const cfg::Config c = load_config(g);
    const std::uint64_t seed = effective_seed(g, c);
    const auto ds = dataset_from_config(c, seed);
    ensure_out_dir(g.out_dir);
    const std::string path = g.out_dir + "/dataset.scds";
    io::save_dataset(ds, path);
    std::size_t events = 0;
    for (bool e : ds.events) events += e ? 1 : 0;
    std::cout << "wrote " << path << ": n=" << ds.size() << " events=" << events
              << " concepts=" << ds.schema.concept_count() << "\n";
    return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& data_path) {
    const cfg::Config c = load_config(g);
    const std::uint64_t seed = effective_seed(g, c);
    const data::ConceptSurvivalDataset ds =
        data_path.empty() ? dataset_from_config(c, seed) : io::load_dataset(data_path);

    const model::ModelSpec spec = spec_from_config(c, ds);
    model::TrainConfig tc = exp::train_from_config(c);
    tc.seed = mix64(seed, 0xB000);

    const model::TrainedModel trained = model::fit(spec, ds, tc, &std::cerr);
    ensure_out_dir(g.out_dir);
    const std::string path = g.out_dir + "/model.scbm";
    io::save_checkpoint(trained, path, seed, cfg::hash_hex(c.canonical()));
    std::cout << "wrote " << path << ": " << model::to_string(spec.arch) << ":"
              << model::to_string(spec.head.kind) << " epochs=" << trained.log.size();
    if (!trained.log.empty())
        std::cout << " final_loss=" << trained.log.back().total
                  << " final_surv=" << trained.log.back().surv;
    std::cout << "\n";
    return 0;
}

int cmd_evaluate(const GlobalOpts& g, const std::string& model_path, const std::string& data_path) {
    const model::TrainedModel m = io::load_checkpoint(model_path);
    const data::ConceptSurvivalDataset ds = io::load_dataset(data_path);
    const model::Metrics metrics = model::evaluate(m, ds);

    char buf[64];
    std::string text;
    std::snprintf(buf, sizeof buf, "c_index = %.6f\n", metrics.c_index);
    text += buf;
    if (metrics.f1_mean) {
        std::snprintf(buf, sizeof buf, "f1_mean = %.6f\n", *metrics.f1_mean);
        text += buf;
        for (std::size_t i = 0; i < metrics.f1_per_concept.size(); ++i) {
            std::snprintf(buf, sizeof buf, "f1.%s = %.6f\n", m.spec.schema.names[i].c_str(),
                          metrics.f1_per_concept[i]);
            text += buf;
        }
    }
    std::cout << text;
    if (!g.out_dir.empty()) {
        ensure_out_dir(g.out_dir);
        write_text(g.out_dir + "/metrics.txt", text);
    }
    return 0;
}

int cmd_explain(const GlobalOpts& g, const std::string& model_path, const std::string& data_path,
                std::size_t index, std::size_t k) {
    const model::TrainedModel m = io::load_checkpoint(model_path);
    const data::ConceptSurvivalDataset ds = io::load_dataset(data_path);
    if (index >= ds.size()) throw std::runtime_error("--index out of range for dataset");

    ensure_out_dir(g.out_dir);
    if (m.spec.head.kind == model::HeadKind::Beran) {
        const auto rep = interpret::explain_with_neighbors(m, ds.images[index], ds, k);
        const std::string text = interpret::report_to_text(rep, m.spec.schema);
        std::cout << text;
        write_text(g.out_dir + "/explanation.txt", text);
        if (g.svg) {
            std::vector<const Tensor*> imgs{&ds.images[index]};
            std::vector<std::string> captions;
            std::string cap = "instance:";
            for (int v : rep.instance_values) cap += " " + std::to_string(v);
            captions.push_back(cap);
            for (std::size_t r = 0; r < rep.neighbors.indices.size(); ++r) {
                imgs.push_back(&ds.images[rep.neighbors.indices[r]]);
                std::string nc = "neighbor " + std::to_string(r) + ":";
                for (int v : rep.neighbors.neighbor_concepts[r]) nc += " " + std::to_string(v);
                captions.push_back(nc);
            }
            write_text(g.out_dir + "/explanation.svg", svg::image_grid(imgs, captions, 5));
        }
    } else {
        const auto rep = interpret::explain_cox_contributions(m, ds.images[index]);
        const std::string text = interpret::report_to_text(rep, m.spec.schema);
        std::cout << text;
        write_text(g.out_dir + "/explanation.txt", text);
    }
    return 0;
}

int cmd_experiment(const GlobalOpts& g, bool timing) {
    const cfg::Config c = load_config(g);
    exp::ExperimentConfig ec = exp::experiment_from_config(c);
    if (g.seed_set) ec.seed = g.seed;
    if (g.threads > 0) ec.threads = static_cast<std::size_t>(g.threads);
    ec.timing = timing;

    const exp::ExperimentResults results = exp::run_experiment(ec, &std::cerr);
    ensure_out_dir(g.out_dir);
    write_text(g.out_dir + "/results.csv", exp::results_to_csv(results.rows));
    write_text(g.out_dir + "/summary.csv", exp::summary_to_csv(results.summary));
    exp::export_reports(results.rows, g.out_dir, g.svg);

    std::cout << exp::summary_to_csv(results.summary);
    if (exp::any_cell_fully_failed(results)) {
        std::cerr << "error: at least one (model, axis value) cell failed in every repetition\n";
        return 1;
    }
    return 0;
}

int cmd_export(const GlobalOpts& g, const std::string& results_path) {
    std::ifstream f(results_path);
    if (!f) throw std::runtime_error("cannot open " + results_path);
    std::ostringstream os;
    os << f.rdbuf();
    const auto rows = exp::parse_results_csv(os.str());
    exp::export_reports(rows, g.out_dir, g.svg);
    std::cout << "exported reports for " << rows.size() << " rows to " << g.out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"concept-based survival learning toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--config", g.config_path, "configuration file (key = value lines)");
    app.add_option("--out", g.out_dir, "output directory");
    auto* seed_opt = app.add_option("--seed", g.seed, "seed override");
    app.add_option("--threads", g.threads, "worker threads (and OpenMP threads)");
    app.add_flag("--svg", g.svg, "emit SVG figures");

    auto* c_gen = app.add_subcommand("generate", "build and save a synthetic dataset");
    std::string data_path, model_path, results_path;
    auto* c_train = app.add_subcommand("train", "fit one model and save a checkpoint");
    c_train->add_option("--data", data_path, "dataset file (built from config when omitted)");
    auto* c_eval = app.add_subcommand("evaluate", "evaluate a checkpoint on a dataset");
    c_eval->add_option("--model", model_path, "checkpoint path")->required();
    c_eval->add_option("--data", data_path, "dataset path")->required();
    std::size_t index = 0, k = 9;
    auto* c_explain = app.add_subcommand("explain", "explain one instance's prediction");
    c_explain->add_option("--model", model_path, "checkpoint path")->required();
    c_explain->add_option("--data", data_path, "dataset path")->required();
    c_explain->add_option("--index", index, "instance index in the dataset");
    c_explain->add_option("--k", k, "neighbor count for beran explanations");
    bool timing = false;
    auto* c_exp = app.add_subcommand("experiment", "run a sweep and write CSV reports");
    c_exp->add_flag("--timing", timing, "record real wall times (breaks byte-reproducibility)");
    auto* c_export = app.add_subcommand("export", "re-derive per-metric reports from results.csv");
    c_export->add_option("--results", results_path, "results.csv path")->required();

    CLI11_PARSE(app, argc, argv);
    g.seed_set = seed_opt->count() > 0;

#ifdef _OPENMP
    if (g.threads > 0) omp_set_num_threads(g.threads);
#endif

    try {
        if (c_gen->parsed()) return cmd_generate(g);
        if (c_train->parsed()) return cmd_train(g, data_path);
        if (c_eval->parsed()) return cmd_evaluate(g, model_path, data_path);
        if (c_explain->parsed()) return cmd_explain(g, model_path, data_path, index, k);
        if (c_exp->parsed()) return cmd_experiment(g, timing);
        if (c_export->parsed()) return cmd_export(g, results_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
