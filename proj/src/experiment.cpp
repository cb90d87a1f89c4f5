#include "scbm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "scbm/rng.hpp"
#include "scbm/svg_report.hpp"

namespace scbm::exp {

const char* kResultsCsvHeader =
    "model,head,axis,axis_value,rep,c_index,f1_mean,f1_per_concept,wall_time_s,status";

void ExperimentConfig::validate() const {
    if (grid.empty()) throw std::invalid_argument("experiment: grid must not be empty");
    if (reps == 0) throw std::invalid_argument("experiment: repetitions must be positive");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("experiment: test fraction must lie in (0,1)");
    if (models.empty()) throw std::invalid_argument("experiment: model list must not be empty");
    for (double v : grid)
        if (!(v > 0.0)) throw std::invalid_argument("experiment: grid values must be positive");
}

model::ModelSpec ExperimentConfig::model_spec(const ModelChoice& choice,
                                              const ConceptSchema& schema) const {
    model::ModelSpec spec;
    spec.arch = choice.arch;
    spec.schema = schema;
    spec.encoder = encoder;
    spec.embedding_dim = embedding_dim;
    spec.concept_head_hidden = head_hidden;
    spec.head.kind = choice.head;
    spec.head.background_size = background;
    spec.head.tau = tau;
    spec.head.bandwidth = (choice.head == model::HeadKind::Beran &&
                           choice.arch == model::Architecture::SurvCBM)
                              ? bandwidth
                              : model::BandwidthMode::Scalar;
    return spec;
}

namespace {

std::string sanitize_error(const std::string& what) {
    std::string out;
    for (char c : what) {
        if (out.size() >= 80) break;
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == ' ' || c == '.' || c == ':' || c == '-' ||
                        c == '_' || c == '(' || c == ')' || c == '[' || c == ']' || c == '\'';
        out += ok ? c : '_';
    }
    return out;
}

std::vector<MetricsRow> run_job(const ExperimentConfig& cfg, std::size_t axis_i, std::size_t rep) {
    const double axis_value = cfg.grid[axis_i];
    const bool n_axis = cfg.axis == SweepAxis::SampleSize;
    const std::size_t n = static_cast<std::size_t>(n_axis ? axis_value : cfg.fixed_value);
    const double rho = n_axis ? cfg.fixed_value : axis_value;
    const std::uint64_t job_seed = mix64(cfg.seed, rep);

    std::vector<MetricsRow> rows(cfg.models.size());
    for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
        rows[mi].model = model::to_string(cfg.models[mi].arch);
        rows[mi].head = model::to_string(cfg.models[mi].head);
        rows[mi].axis = n_axis ? "n" : "rho";
        rows[mi].axis_value = axis_value;
        rows[mi].rep = rep;
    }

    data::ConceptSurvivalDataset train_ds, test_ds;
    try {
        data::SourcePool pool =
            data::synth_glyph_pool(cfg.pool_categories, cfg.pool_per_category, mix64(job_seed, 0xA001));
        if (cfg.kind == data::DatasetKind::CifarStyle) data::tag_pool_cifar_style(pool);
        data::GenerationConfig gen = cfg.gen;
        gen.uncensored_rho = rho;
        gen.seed = mix64(job_seed, 0xA002);
        const data::ConceptSurvivalDataset ds = data::build_dataset(cfg.kind, pool, n, gen);

        std::vector<std::size_t> idx(ds.size());
        std::iota(idx.begin(), idx.end(), 0);
        Rng split_rng(mix64(job_seed, 0xA003));
        split_rng.shuffle(idx);
        std::size_t n_test = static_cast<std::size_t>(std::llround(
            static_cast<double>(ds.size()) * cfg.test_fraction));
        n_test = std::max<std::size_t>(1, std::min(n_test, ds.size() - 1));
        test_ds = ds.subset({idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test)});
        train_ds = ds.subset({idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end()});
    } catch (const std::exception& e) {
        for (auto& row : rows) row.error = sanitize_error(e.what());
        return rows;
    }

    for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
        MetricsRow& row = rows[mi];
        try {
            const model::ModelSpec spec = cfg.model_spec(cfg.models[mi], train_ds.schema);
            model::TrainConfig tc = cfg.train;
            tc.seed = mix64(job_seed, 0xB000 + mi);
            const auto t0 = std::chrono::steady_clock::now();
            const model::TrainedModel trained = model::fit(spec, train_ds, tc);
            const model::Metrics metrics = model::evaluate(trained, test_ds);
            const auto t1 = std::chrono::steady_clock::now();
            row.ok = true;
            row.c_index = metrics.c_index;
            row.f1_mean = metrics.f1_mean;
            row.f1_per_concept = metrics.f1_per_concept;
            row.wall_time_s = cfg.timing
                                  ? std::chrono::duration<double>(t1 - t0).count()
                                  : 0.0;
        } catch (const std::exception& e) {
            row.error = sanitize_error(e.what());
        }
    }
    return rows;
}

}  // namespace

ExperimentResults run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
    cfg.validate();
    const std::size_t jobs = cfg.grid.size() * cfg.reps;
    std::vector<std::vector<MetricsRow>> slots(jobs);
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;

    auto worker = [&]() {
        while (true) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs) break;
            const std::size_t axis_i = j / cfg.reps;
            const std::size_t rep = j % cfg.reps;
            slots[j] = run_job(cfg, axis_i, rep);
            if (log) {
                std::lock_guard<std::mutex> lk(log_mutex);
                *log << "done axis=" << cfg.grid[axis_i] << " rep=" << rep << "\n";
            }
        }
    };

    const std::size_t nthreads = std::max<std::size_t>(1, std::min(cfg.threads, jobs));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    ExperimentResults results;
    for (auto& slot : slots)
        for (auto& row : slot) results.rows.push_back(std::move(row));
    results.summary = summarize(results.rows);
    return results;
}

bool any_cell_fully_failed(const ExperimentResults& results) {
    for (const auto& s : results.summary)
        if (s.n_ok == 0) return true;
    return false;
}

std::vector<SummaryRow> summarize(const std::vector<MetricsRow>& rows) {
    std::vector<SummaryRow> out;
    auto find_cell = [&](const MetricsRow& r) -> SummaryRow& {
        for (auto& s : out)
            if (s.model == r.model && s.head == r.head && s.axis_value == r.axis_value) return s;
        out.push_back(SummaryRow{r.model, r.head, r.axis, r.axis_value, 0, 0, 0, 0, 0, 0, false});
        return out.back();
    };

    struct Acc {
        std::vector<double> c, f;
    };
    std::vector<Acc> accs;
    for (const auto& r : rows) {
        SummaryRow& cell = find_cell(r);
        const std::size_t ci = static_cast<std::size_t>(&cell - out.data());
        if (accs.size() < out.size()) accs.resize(out.size());
        if (!r.ok) {
            ++cell.n_failed;
            continue;
        }
        ++cell.n_ok;
        accs[ci].c.push_back(r.c_index);
        if (r.f1_mean) {
            accs[ci].f.push_back(*r.f1_mean);
            cell.has_f1 = true;
        }
    }

    auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
        mean = 0.0;
        sd = 0.0;
        if (v.empty()) return;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        if (v.size() < 2) return;
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    };
    for (std::size_t i = 0; i < out.size(); ++i) {
        mean_std(accs[i].c, out[i].c_index_mean, out[i].c_index_std);
        mean_std(accs[i].f, out[i].f1_mean, out[i].f1_std);
    }
    return out;
}

namespace {

std::string fmt_metric(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fmt_axis(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

std::string results_to_csv(const std::vector<MetricsRow>& rows) {
    std::string out = kResultsCsvHeader;
    out += '\n';
    char buf[64];
    for (const auto& r : rows) {
        out += r.model + ',' + r.head + ',' + r.axis + ',' + fmt_axis(r.axis_value) + ',';
        std::snprintf(buf, sizeof buf, "%zu", r.rep);
        out += buf;
        out += ',';
        if (r.ok) {
            out += fmt_metric(r.c_index);
            out += ',';
            if (r.f1_mean) out += fmt_metric(*r.f1_mean);
            out += ',';
            for (std::size_t i = 0; i < r.f1_per_concept.size(); ++i) {
                if (i) out += ';';
                out += fmt_metric(r.f1_per_concept[i]);
            }
            out += ',';
            std::snprintf(buf, sizeof buf, "%.3f", r.wall_time_s);
            out += buf;
            out += ",ok\n";
        } else {
            out += ",,,,error:" + r.error + "\n";
        }
    }
    return out;
}

std::string summary_to_csv(const std::vector<SummaryRow>& summary) {
    std::string out =
        "model,head,axis,axis_value,n_ok,n_failed,c_index_mean,c_index_std,f1_mean,f1_std\n";
    char buf[64];
    for (const auto& s : summary) {
        out += s.model + ',' + s.head + ',' + s.axis + ',' + fmt_axis(s.axis_value) + ',';
        std::snprintf(buf, sizeof buf, "%zu,%zu,", s.n_ok, s.n_failed);
        out += buf;
        out += fmt_metric(s.c_index_mean) + ',' + fmt_metric(s.c_index_std) + ',';
        if (s.has_f1) {
            out += fmt_metric(s.f1_mean) + ',' + fmt_metric(s.f1_std);
        } else {
            out += ",";
        }
        out += '\n';
    }
    return out;
}

std::vector<MetricsRow> parse_results_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("results csv: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kResultsCsvHeader)
        throw std::runtime_error("results csv: unexpected header '" + line + "'");

    std::vector<MetricsRow> rows;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                f.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        f.push_back(cur);
        if (f.size() != 10)
            throw std::runtime_error("results csv: malformed row '" + line + "'");
        MetricsRow r;
        r.model = f[0];
        r.head = f[1];
        r.axis = f[2];
        r.axis_value = std::stod(f[3]);
        r.rep = static_cast<std::size_t>(std::stoull(f[4]));
        r.ok = f[9] == "ok";
        if (r.ok) {
            r.c_index = std::stod(f[5]);
            if (!f[6].empty()) r.f1_mean = std::stod(f[6]);
            if (!f[7].empty()) {
                std::string part;
                for (char c : f[7] + ";") {
                    if (c == ';') {
                        if (!part.empty()) r.f1_per_concept.push_back(std::stod(part));
                        part.clear();
                    } else {
                        part += c;
                    }
                }
            }
            r.wall_time_s = std::stod(f[8]);
        } else {
            r.error = f[9].size() > 6 ? f[9].substr(6) : "";
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void export_reports(const std::vector<MetricsRow>& rows, const std::string& out_dir, bool svg) {
    if (rows.empty()) throw std::invalid_argument("export_reports: empty results");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);

    const auto summary = summarize(rows);
    // model order and axis grid in first-seen order
    std::vector<std::string> model_ids;
    std::vector<double> axis_values;
    for (const auto& s : summary) {
        const std::string id = s.model + ":" + s.head;
        if (std::find(model_ids.begin(), model_ids.end(), id) == model_ids.end())
            model_ids.push_back(id);
        if (std::find(axis_values.begin(), axis_values.end(), s.axis_value) == axis_values.end())
            axis_values.push_back(s.axis_value);
    }
    std::sort(axis_values.begin(), axis_values.end());
    const std::string axis_name = rows.front().axis;

    auto cell = [&](const std::string& id, double av) -> const SummaryRow* {
        for (const auto& s : summary)
            if (s.model + ":" + s.head == id && s.axis_value == av) return &s;
        return nullptr;
    };

    auto write_file = [&](const std::string& name, const std::string& content) {
        const std::string path = out_dir + "/" + name;
        std::ofstream f(path, std::ios::trunc);
        if (!f) throw std::runtime_error("export_reports: cannot write " + path);
        f << content;
        if (!f) throw std::runtime_error("export_reports: write failed for " + path);
    };

    for (const char* metric : {"c_index", "f1_mean"}) {
        const bool want_f1 = std::string(metric) == "f1_mean";
        std::string csv = "axis_value";
        std::vector<std::string> ids;
        for (const auto& id : model_ids) {
            bool include = true;
            if (want_f1) {
                include = false;
                for (const auto& s : summary)
                    if (s.model + ":" + s.head == id && s.has_f1) include = true;
            }
            if (include) {
                ids.push_back(id);
                csv += "," + id + "_mean," + id + "_std";
            }
        }
        csv += '\n';
        for (double av : axis_values) {
            csv += fmt_axis(av);
            for (const auto& id : ids) {
                const SummaryRow* s = cell(id, av);
                if (s && s->n_ok > 0) {
                    csv += ',' + fmt_metric(want_f1 ? s->f1_mean : s->c_index_mean);
                    csv += ',' + fmt_metric(want_f1 ? s->f1_std : s->c_index_std);
                } else {
                    csv += ",,";
                }
            }
            csv += '\n';
        }
        write_file(std::string(metric) + ".csv", csv);

        if (svg && !ids.empty()) {
            std::vector<svg::Series> series;
            for (const auto& id : ids) {
                svg::Series s;
                s.label = id;
                for (double av : axis_values) {
                    const SummaryRow* sr = cell(id, av);
                    if (!sr || sr->n_ok == 0) continue;
                    s.x.push_back(av);
                    s.mean.push_back(want_f1 ? sr->f1_mean : sr->c_index_mean);
                    s.stddev.push_back(want_f1 ? sr->f1_std : sr->c_index_std);
                }
                if (!s.x.empty()) series.push_back(std::move(s));
            }
            if (!series.empty())
                write_file(std::string(metric) + ".svg",
                           svg::line_chart(std::string(metric) + " vs " + axis_name, axis_name,
                                           metric, series));
        }
    }
}

// ------------------------------------------------------------- config mapping

const std::set<std::string>& allowed_config_keys() {
    static const std::set<std::string> keys = {
        "seed",
        "pool.kind", "pool.categories", "pool.per_category", "pool.images_path", "pool.labels_path",
        "dataset.kind", "dataset.n", "dataset.encoding", "dataset.b", "dataset.nu",
        "dataset.lambda", "dataset.rho",
        "model.architecture", "model.head", "model.embedding_dim", "model.head_hidden",
        "model.tau", "model.bandwidth", "model.background",
        "encoder.conv", "encoder.pool", "encoder.dense",
        "train.alpha", "train.omega", "train.lr", "train.weight_decay", "train.epochs",
        "train.batch", "train.resamples", "train.batches_per_epoch", "train.optimizer",
        "experiment.axis", "experiment.grid", "experiment.fixed", "experiment.reps",
        "experiment.test_fraction", "experiment.models",
        "explain.k", "explain.index",
    };
    return keys;
}

data::DatasetKind dataset_kind_from_string(const std::string& s) {
    if (s == "mnist") return data::DatasetKind::Mnist;
    if (s == "mnist-sin") return data::DatasetKind::MnistSin;
    if (s == "cifar-style") return data::DatasetKind::CifarStyle;
    throw std::invalid_argument("unknown dataset kind: " + s);
}

data::SourcePool pool_from_config(const cfg::Config& c, std::uint64_t seed,
                                  data::DatasetKind kind) {
    const std::string pk = c.get_str("pool.kind", "glyphs");
    data::SourcePool pool;
    if (pk == "glyphs") {
        pool = data::synth_glyph_pool(c.get_size("pool.categories", 10),
                                      c.get_size("pool.per_category", 200), seed);
    } else if (pk == "idx") {
        pool = data::load_idx_pool(c.get_str("pool.images_path"), c.get_str("pool.labels_path"));
    } else {
        throw std::invalid_argument("config: pool.kind must be 'glyphs' or 'idx'");
    }
    if (kind == data::DatasetKind::CifarStyle) data::tag_pool_cifar_style(pool);
    return pool;
}

data::GenerationConfig generation_from_config(const cfg::Config& c, data::DatasetKind kind) {
    const std::string enc = c.get_str("dataset.encoding", "integer");
    data::GenerationConfig gen;
    if (enc == "integer") {
        gen = data::default_generation(kind);
    } else if (enc == "one-hot") {
        gen = kind == data::DatasetKind::CifarStyle ? data::onehot_cifar_generation()
                                                    : data::onehot_mnist_generation();
        if (kind == data::DatasetKind::MnistSin) gen.law = data::TimeLaw::WeibullSin;
    } else {
        throw std::invalid_argument("config: dataset.encoding must be 'integer' or 'one-hot'");
    }
    if (c.has("dataset.b")) gen.coefficients = c.get_double_list("dataset.b");
    gen.nu = c.get_double("dataset.nu", gen.nu);
    gen.lambda = c.get_double("dataset.lambda", gen.lambda);
    gen.uncensored_rho = c.get_double("dataset.rho", 0.33);
    return gen;
}

nn::EncoderConfig encoder_from_config(const cfg::Config& c, std::size_t in_h, std::size_t in_w,
                                      std::size_t in_c) {
    nn::EncoderConfig enc;
    enc.in_h = in_h;
    enc.in_w = in_w;
    enc.in_c = in_c;
    if (c.has("encoder.conv")) {
        enc.convs.clear();
        for (const auto& part : c.get_str_list("encoder.conv")) {
            nn::ConvSpec spec;
            if (std::sscanf(part.c_str(), "%zux%zux%zu", &spec.filters, &spec.kernel,
                            &spec.stride) != 3)
                throw std::invalid_argument("config: encoder.conv entries must look like 8x3x1, got '" +
                                            part + "'");
            enc.convs.push_back(spec);
        }
    }
    enc.pool = c.get_size("encoder.pool", enc.pool);
    if (c.has("encoder.dense")) {
        enc.dense.clear();
        for (double d : c.get_double_list("encoder.dense"))
            enc.dense.push_back(static_cast<std::size_t>(d));
    }
    return enc;
}

model::TrainConfig train_from_config(const cfg::Config& c) {
    model::TrainConfig tc;
    tc.alpha = c.get_double("train.alpha", 0.5);
    tc.omega = c.get_double("train.omega", 1.0);
    tc.lr = c.get_double("train.lr", 1e-3);
    tc.weight_decay = c.get_double("train.weight_decay", 0.0);
    tc.epochs = c.get_size("train.epochs", 30);
    tc.batch = c.get_size("train.batch", 64);
    tc.background_resamples = c.get_size("train.resamples", 1);
    tc.batches_per_epoch = c.get_size("train.batches_per_epoch", 0);
    const std::string opt = c.get_str("train.optimizer", "momentum");
    if (opt == "momentum") tc.optimizer = model::OptimizerKind::Momentum;
    else if (opt == "adam") tc.optimizer = model::OptimizerKind::Adam;
    else throw std::invalid_argument("config: train.optimizer must be 'momentum' or 'adam'");
    return tc;
}

ExperimentConfig experiment_from_config(const cfg::Config& c) {
    c.require_known(allowed_config_keys());
    ExperimentConfig e;
    e.kind = dataset_kind_from_string(c.get_str("dataset.kind", "mnist"));
    const std::string axis = c.get_str("experiment.axis", "n");
    if (axis == "n") e.axis = SweepAxis::SampleSize;
    else if (axis == "rho") e.axis = SweepAxis::UncensoredProportion;
    else throw std::invalid_argument("config: experiment.axis must be 'n' or 'rho'");
    if (c.has("experiment.grid")) e.grid = c.get_double_list("experiment.grid");
    e.fixed_value = c.get_double("experiment.fixed",
                                 e.axis == SweepAxis::SampleSize ? 0.33 : 1000.0);
    e.reps = c.get_size("experiment.reps", 10);
    e.test_fraction = c.get_double("experiment.test_fraction", 0.4);

    e.models.clear();
    const std::string model_list = c.get_str("experiment.models", "survcbm:cox,survbase:cox");
    std::string cur;
    auto push_model = [&](const std::string& item) {
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("config: experiment.models entries look like survcbm:cox");
        e.models.push_back({model::architecture_from_string(item.substr(0, colon)),
                            model::head_from_string(item.substr(colon + 1))});
    };
    for (char ch : model_list + ",") {
        if (ch == ',') {
            if (!cur.empty()) push_model(cur);
            cur.clear();
        } else if (ch != ' ') {
            cur += ch;
        }
    }

    e.train = train_from_config(c);
    e.gen = generation_from_config(c, e.kind);
    // composites tile four source images 2x2
    const std::size_t glyph = 28;
    e.encoder = encoder_from_config(c, 2 * glyph, 2 * glyph, 1);
    e.embedding_dim = c.get_size("model.embedding_dim", 32);
    e.head_hidden = c.get_size("model.head_hidden", 32);
    e.background = c.get_size("model.background", 128);
    e.tau = c.get_double("model.tau", 1.0);
    const std::string bw = c.get_str("model.bandwidth", "scalar");
    if (bw == "scalar") e.bandwidth = model::BandwidthMode::Scalar;
    else if (bw == "per-value") e.bandwidth = model::BandwidthMode::PerValue;
    else throw std::invalid_argument("config: model.bandwidth must be 'scalar' or 'per-value'");
    e.pool_categories = c.get_size("pool.categories", 10);
    e.pool_per_category = c.get_size("pool.per_category", 200);
    e.seed = c.get_u64("seed", 42);
    return e;
}

}  // namespace scbm::exp
