#include "scbm/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace scbm::model {

std::string to_string(Architecture a) {
    switch (a) {
        case Architecture::SurvCBM: return "survcbm";
        case Architecture::SurvRCM: return "survrcm";
        case Architecture::SurvBase: return "survbase";
    }
    return "?";
}

std::string to_string(HeadKind h) { return h == HeadKind::Cox ? "cox" : "beran"; }

Architecture architecture_from_string(const std::string& s) {
    if (s == "survcbm") return Architecture::SurvCBM;
    if (s == "survrcm") return Architecture::SurvRCM;
    if (s == "survbase") return Architecture::SurvBase;
    throw std::invalid_argument("unknown architecture: " + s);
}

HeadKind head_from_string(const std::string& s) {
    if (s == "cox") return HeadKind::Cox;
    if (s == "beran") return HeadKind::Beran;
    throw std::invalid_argument("unknown survival head: " + s);
}

std::size_t ModelSpec::head_input_dim() const {
    return arch == Architecture::SurvCBM ? schema.total_width() : embedding_dim;
}

void ModelSpec::validate() const {
    if (uses_concepts() && schema.concept_count() == 0)
        throw std::invalid_argument("ModelSpec: concept schema required for " + to_string(arch));
    if (arch != Architecture::SurvCBM && embedding_dim == 0)
        throw std::invalid_argument("ModelSpec: embedding dimension must be positive");
    if (head.kind == HeadKind::Beran) {
        if (head.background_size < 2)
            throw std::invalid_argument("ModelSpec: beran background size must be at least 2");
        if (!(head.tau > 0.0)) throw std::invalid_argument("ModelSpec: tau must be positive");
        if (head.bandwidth == BandwidthMode::PerValue && arch != Architecture::SurvCBM)
            throw std::invalid_argument(
                "ModelSpec: per-value bandwidths are defined on concept logits and require survcbm");
    }
}

void TrainConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("TrainConfig: alpha must lie in (0,1)");
    if (!(omega > 0.0)) throw std::invalid_argument("TrainConfig: omega must be positive");
    if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: learning rate must be positive");
    if (epochs == 0 || batch == 0 || background_resamples == 0)
        throw std::invalid_argument("TrainConfig: counts must be positive");
}

// ------------------------------------------------------------------ Optimizer

Optimizer::Optimizer(OptimizerKind kind, double lr, double weight_decay)
    : kind_(kind), lr_(lr), wd_(weight_decay) {}

void Optimizer::step(ad::ParameterSet& params, const ad::GradientMap& grads) {
    ++t_;
    for (const auto& [name, g] : grads) {
        Tensor& p = params.value(name);
        if (kind_ == OptimizerKind::Momentum) {
            auto [it, fresh] = m_.try_emplace(name, Tensor(p.shape()));
            Tensor& vel = it->second;
            (void)fresh;
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double gi = g.vec()[i] + wd_ * p.vec()[i];
                vel.vec()[i] = 0.9 * vel.vec()[i] - lr_ * gi;
                p.vec()[i] += vel.vec()[i];
            }
        } else {
            constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
            auto [mi, f1] = m_.try_emplace(name, Tensor(p.shape()));
            auto [vi, f2] = v_.try_emplace(name, Tensor(p.shape()));
            (void)f1;
            (void)f2;
            const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
            const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double gi = g.vec()[i] + wd_ * p.vec()[i];
                mi->second.vec()[i] = b1 * mi->second.vec()[i] + (1.0 - b1) * gi;
                vi->second.vec()[i] = b2 * vi->second.vec()[i] + (1.0 - b2) * gi * gi;
                const double mhat = mi->second.vec()[i] / c1;
                const double vhat = vi->second.vec()[i] / c2;
                p.vec()[i] -= lr_ * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }
}

// ------------------------------------------------------------------- building

void init_params(const ModelSpec& spec, ad::ParameterSet& ps, Rng& rng) {
    switch (spec.arch) {
        case Architecture::SurvCBM:
            nn::init_concept_encoder_params(ps, spec.schema, spec.encoder, rng);
            break;
        case Architecture::SurvRCM:
            nn::init_embedding_encoder_params(ps, spec.encoder, spec.embedding_dim, rng);
            nn::init_dense_head_params(ps, spec.schema, spec.embedding_dim,
                                       spec.concept_head_hidden, rng);
            break;
        case Architecture::SurvBase:
            nn::init_embedding_encoder_params(ps, spec.encoder, spec.embedding_dim, rng);
            break;
    }
    const std::size_t dim = spec.head_input_dim();
    if (spec.head.kind == HeadKind::Cox) {
        ps.add("cox.b", nn::glorot_init({dim, 1}, dim, 1, rng));
    } else if (spec.head.bandwidth == BandwidthMode::PerValue) {
        ps.add("beran.log_tau", Tensor::full({1, dim}, std::log(spec.head.tau)));
    }
}

ForwardNodes build_forward(ad::Graph& g, const ad::ParameterSet& ps, const ModelSpec& spec, int x) {
    ForwardNodes out;
    switch (spec.arch) {
        case Architecture::SurvCBM: {
            out.blocks = nn::concept_encoder_forward(g, ps, x, spec.schema, spec.encoder);
            out.head_input = g.concat_cols(out.blocks);
            break;
        }
        case Architecture::SurvRCM: {
            const int z = nn::embedding_encoder_forward(g, ps, x, spec.encoder, spec.embedding_dim);
            out.blocks = nn::dense_head_forward(g, ps, z, spec.schema, spec.concept_head_hidden);
            out.head_input = z;
            break;
        }
        case Architecture::SurvBase: {
            out.head_input =
                nn::embedding_encoder_forward(g, ps, x, spec.encoder, spec.embedding_dim);
            break;
        }
    }
    return out;
}

int beran_weight_node(ad::Graph& g, const ad::ParameterSet& ps, const ModelSpec& spec, int query,
                      const Tensor& background_rep) {
    const std::size_t B = background_rep.dim(0);
    const std::size_t dim = background_rep.dim(1);
    if (g.value(query).cols() != dim)
        throw std::invalid_argument("beran_weight_node: query width does not match background");

    Tensor rT({dim, B});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < dim; ++c) rT.at2(c, b) = background_rep.at2(b, c);
    const int ones_row = g.constant(Tensor::full({1, B}, 1.0));

    if (spec.head.bandwidth == BandwidthMode::PerValue) {
        // squared distance with one trainable bandwidth per logit coordinate
        const int inv_tau = g.exp(g.scale(g.param("beran.log_tau", ps), -1.0));  // (1,dim)
        const int qw = g.mul(query, inv_tau);
        const int q2 = g.sum_rows(g.mul(qw, query));  // (N,1)
        const int rc = g.constant(background_rep);
        const int r2 = g.reshape(g.sum_rows(g.mul(g.mul(rc, inv_tau), rc)), {1, B});
        const int cross = g.matmul(qw, g.constant(std::move(rT)));
        const int d2 = g.sub(g.add(g.matmul(q2, ones_row), r2), g.scale(cross, 2.0));
        return g.softmax(g.scale(d2, -1.0));
    }

    const int q2 = g.sum_rows(g.mul(query, query));  // (N,1)
    Tensor r2row({1, B});
    for (std::size_t b = 0; b < B; ++b) {
        double s = 0.0;
        for (std::size_t c = 0; c < dim; ++c) s += background_rep.at2(b, c) * background_rep.at2(b, c);
        r2row.at2(0, b) = s;
    }
    const int cross = g.matmul(query, g.constant(std::move(rT)));
    const int d2 =
        g.sub(g.add(g.matmul(q2, ones_row), g.constant(std::move(r2row))), g.scale(cross, 2.0));
    return g.softmax(g.scale(d2, -1.0 / spec.head.tau));
}

int beran_expected_time_node(ad::Graph& g, int alpha,
                             const std::vector<surv::EventSample>& background_sorted) {
    const std::size_t B = background_sorted.size();
    if (B < 2) throw std::invalid_argument("beran_expected_time_node: background too small");
    if (g.value(alpha).cols() != B)
        throw std::invalid_argument("beran_expected_time_node: weight width mismatch");
    for (std::size_t i = 1; i < B; ++i)
        if (background_sorted[i].time < background_sorted[i - 1].time)
            throw std::invalid_argument("beran_expected_time_node: background not sorted");

    Tensor upper_strict({B, B});  // [j][i] = 1 for j < i
    Tensor upper_incl({B, B});    // [j][i] = 1 for j <= i
    Tensor delta({1, B});
    Tensor seg({B, 1});
    for (std::size_t j = 0; j < B; ++j) {
        for (std::size_t i = 0; i < B; ++i) {
            if (j < i) upper_strict.at2(j, i) = 1.0;
            if (j <= i) upper_incl.at2(j, i) = 1.0;
        }
        delta.at2(0, j) = background_sorted[j].event ? 1.0 : 0.0;
        seg.at2(j, 0) =
            j + 1 < B ? background_sorted[j + 1].time - background_sorted[j].time : 0.0;
    }

    const int prefix = g.matmul(alpha, g.constant(std::move(upper_strict)));
    const int denom = g.clamp_min(g.add_const(g.scale(prefix, -1.0), 1.0), 1e-12);
    const int factor = g.add_const(g.scale(g.div(alpha, denom), -1.0), 1.0);
    const int logf = g.log(g.clamp_min(factor, 1e-12));
    const int masked = g.mul(logf, g.constant(std::move(delta)));
    const int cumlog = g.matmul(masked, g.constant(std::move(upper_incl)));
    const int surv_vals = g.exp(cumlog);  // (N,B): S at each background knot
    return g.add_const(g.matmul(surv_vals, g.constant(std::move(seg))),
                       background_sorted.front().time);
}

BatchLoss build_batch_loss(ad::Graph& g, const ad::ParameterSet& ps, const ModelSpec& spec,
                           const TrainConfig& cfg, int x,
                           const std::vector<std::vector<int>>& labels,
                           const std::vector<surv::EventSample>& batch_events,
                           const Tensor& background_rep,
                           const std::vector<surv::EventSample>& background_events) {
    BatchLoss out;
    const ForwardNodes fw = build_forward(g, ps, spec, x);
    if (spec.uses_concepts()) out.ce = loss::concept_cross_entropy(g, fw.blocks, labels);

    bool can_surv = loss::comparable_pair_count(batch_events) > 0;
    if (spec.head.kind == HeadKind::Beran && background_events.size() < 2) can_surv = false;
    if (can_surv) {
        int that;
        if (spec.head.kind == HeadKind::Cox) {
            that = g.scale(g.matmul(fw.head_input, g.param("cox.b", ps)), -1.0);
        } else {
            const int alpha = beran_weight_node(g, ps, spec, fw.head_input, background_rep);
            that = beran_expected_time_node(g, alpha, background_events);
        }
        out.surv = loss::smoothed_c_index(g, that, batch_events, cfg.omega);
    } else {
        out.surv_skipped = true;
    }

    if (spec.arch == Architecture::SurvBase) {
        if (out.surv >= 0) out.loss = g.scale(out.surv, -1.0);
    } else if (out.surv >= 0) {
        out.loss = loss::total_loss(g, out.surv, out.ce, cfg.alpha);
    } else {
        out.loss = g.scale(out.ce, 1.0 - cfg.alpha);
    }
    return out;
}

Tensor stack_images(const std::vector<Tensor>& images, const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw std::invalid_argument("stack_images: empty index list");
    const Tensor& first = images.at(indices[0]);
    if (first.ndim() != 3) throw std::invalid_argument("stack_images: images must be (H,W,C)");
    Tensor out({indices.size(), first.dim(0), first.dim(1), first.dim(2)});
    const std::size_t per = first.size();
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const Tensor& img = images.at(indices[r]);
        if (!img.same_shape(first)) throw std::invalid_argument("stack_images: mixed image shapes");
        std::copy(img.vec().begin(), img.vec().end(), out.vec().begin() + r * per);
    }
    return out;
}

// ------------------------------------------------------------------------ fit

namespace {

/// Plain forward of the head input for a set of training indices.
Tensor head_input_for(const ModelSpec& spec, const ad::ParameterSet& ps,
                      const data::ConceptSurvivalDataset& ds,
                      const std::vector<std::size_t>& indices) {
    ad::Graph g;
    const int x = g.input(stack_images(ds.images, indices));
    const ForwardNodes fw = build_forward(g, ps, spec, x);
    g.forward(ps);
    return g.value(fw.head_input);
}

struct BackgroundDraw {
    std::vector<std::size_t> train_indices;  // time-ascending
    std::vector<surv::EventSample> events;
    Tensor rep;  // (B, dim)
};

BackgroundDraw draw_background(const ModelSpec& spec, const ad::ParameterSet& ps,
                               const data::ConceptSurvivalDataset& ds, Rng& rng,
                               std::size_t want) {
    BackgroundDraw out;
    auto picked = rng.sample_without_replacement(ds.size(), std::min(want, ds.size()));
    std::vector<surv::EventSample> samples(picked.size());
    for (std::size_t i = 0; i < picked.size(); ++i)
        samples[i] = {ds.times[picked[i]], static_cast<bool>(ds.events[picked[i]])};
    const auto order = surv::sort_order_by_time(samples);
    out.train_indices.reserve(picked.size());
    out.events.reserve(picked.size());
    for (std::size_t o : order) {
        out.train_indices.push_back(picked[o]);
        out.events.push_back(samples[o]);
    }
    out.rep = head_input_for(spec, ps, ds, out.train_indices);
    return out;
}

/// Background rows minus the current batch (no self-matching).
void filter_background(const BackgroundDraw& bg, const std::vector<char>& in_batch,
                       Tensor& rep_out, std::vector<surv::EventSample>& events_out) {
    const std::size_t dim = bg.rep.dim(1);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < bg.train_indices.size(); ++i)
        if (!in_batch[bg.train_indices[i]]) keep.push_back(i);
    rep_out = Tensor({keep.size(), dim});
    events_out.clear();
    events_out.reserve(keep.size());
    for (std::size_t r = 0; r < keep.size(); ++r) {
        for (std::size_t c = 0; c < dim; ++c) rep_out.at2(r, c) = bg.rep.at2(keep[r], c);
        events_out.push_back(bg.events[keep[r]]);
    }
}

}  // namespace

TrainedModel fit(const ModelSpec& spec, const data::ConceptSurvivalDataset& train,
                 const TrainConfig& cfg, std::ostream* warnings) {
    spec.validate();
    cfg.validate();
    if (train.size() == 0) throw std::invalid_argument("fit: empty training dataset");
    train.validate();
    if (spec.uses_concepts() && !(train.schema == spec.schema))
        throw std::invalid_argument("fit: dataset schema does not match the model spec");

    Rng rng(cfg.seed);
    TrainedModel model;
    model.spec = spec;
    Rng init_rng = rng.split(0x1717);
    init_params(spec, model.params, init_rng);
    Optimizer opt(cfg.optimizer, cfg.lr, cfg.weight_decay);

    const std::size_t n = train.size();
    const bool beran = spec.head.kind == HeadKind::Beran;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = rng.split(0x5f5f);
    Rng bg_rng = rng.split(0xb6b6);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        const std::size_t full_batches = (n + cfg.batch - 1) / cfg.batch;
        const std::size_t nbatches = cfg.batches_per_epoch == 0
                                         ? full_batches
                                         : std::min(cfg.batches_per_epoch, full_batches);
        const std::size_t resample_every =
            std::max<std::size_t>(1, nbatches / cfg.background_resamples);

        BackgroundDraw bg;
        EpochLog log;
        double total_sum = 0.0, surv_sum = 0.0, ce_sum = 0.0;
        std::size_t loss_batches = 0, surv_batches = 0, ce_batches = 0;

        for (std::size_t b = 0; b < nbatches; ++b) {
            if (beran && b % resample_every == 0)
                bg = draw_background(spec, model.params, train, bg_rng, spec.head.background_size);

            const std::size_t lo = b * cfg.batch;
            const std::size_t hi = std::min(lo + cfg.batch, n);
            std::vector<std::size_t> batch_idx(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                               order.begin() + static_cast<std::ptrdiff_t>(hi));

            std::vector<surv::EventSample> batch_events(batch_idx.size());
            std::vector<std::vector<int>> labels(batch_idx.size());
            for (std::size_t i = 0; i < batch_idx.size(); ++i) {
                batch_events[i] = {train.times[batch_idx[i]],
                                   static_cast<bool>(train.events[batch_idx[i]])};
                labels[i] = train.concepts[batch_idx[i]];
            }

            Tensor bg_rep;
            std::vector<surv::EventSample> bg_events;
            if (beran) {
                std::vector<char> in_batch(n, 0);
                for (std::size_t i : batch_idx) in_batch[i] = 1;
                filter_background(bg, in_batch, bg_rep, bg_events);
            }

            ad::Graph g;
            const int x = g.input(stack_images(train.images, batch_idx));
            const BatchLoss bl =
                build_batch_loss(g, model.params, spec, cfg, x, labels, batch_events, bg_rep, bg_events);

            if (bl.surv_skipped) {
                ++log.surv_skipped;
                if (warnings)
                    *warnings << "warning: epoch " << epoch << " batch " << b
                              << ": no comparable pairs, survival term skipped\n";
            }
            if (bl.loss < 0) continue;  // SurvBase batch with nothing to optimize

            g.forward(model.params);
            ad::GradientMap grads = g.backward(bl.loss, model.params);
            opt.step(model.params, grads);

            total_sum += g.value(bl.loss).scalar_value();
            ++loss_batches;
            if (bl.surv >= 0) {
                surv_sum += g.value(bl.surv).scalar_value();
                ++surv_batches;
            }
            if (bl.ce >= 0) {
                ce_sum += g.value(bl.ce).scalar_value();
                ++ce_batches;
            }
        }

        if (surv_batches == 0)
            throw std::runtime_error("fit: no comparable pairs in any batch of epoch " +
                                     std::to_string(epoch));
        log.total = loss_batches ? total_sum / static_cast<double>(loss_batches) : 0.0;
        log.surv = surv_sum / static_cast<double>(surv_batches);
        log.ce = ce_batches ? ce_sum / static_cast<double>(ce_batches) : 0.0;
        model.log.push_back(log);
    }

    if (spec.head.kind == HeadKind::Cox) {
        model.baseline = surv::sf_from_cumhazard(surv::nelson_aalen(train.event_samples()));
    } else {
        Rng final_rng = rng.split(0xF1A1);
        BackgroundDraw bg =
            draw_background(spec, model.params, train, final_rng, spec.head.background_size);
        model.background_rep = std::move(bg.rep);
        model.background_events = std::move(bg.events);
    }
    return model;
}

// -------------------------------------------------------------------- predict

namespace {

PerValueBandwidths bandwidths_from_params(const TrainedModel& model) {
    const Tensor& log_tau = model.params.value("beran.log_tau");
    PerValueBandwidths tau;
    tau.tau.resize(model.spec.schema.concept_count());
    std::size_t off = 0;
    for (std::size_t i = 0; i < model.spec.schema.concept_count(); ++i) {
        tau.tau[i].resize(model.spec.schema.cardinalities[i]);
        for (std::size_t j = 0; j < tau.tau[i].size(); ++j)
            tau.tau[i][j] = std::exp(log_tau.vec()[off++]);
    }
    return tau;
}

ConceptLogits logits_from_row(const ConceptSchema& schema, const double* row) {
    std::vector<std::vector<double>> blocks(schema.concept_count());
    std::size_t off = 0;
    for (std::size_t i = 0; i < schema.concept_count(); ++i) {
        blocks[i].assign(row + off, row + off + schema.cardinalities[i]);
        off += schema.cardinalities[i];
    }
    return ConceptLogits(schema, std::move(blocks));
}

}  // namespace

std::vector<PredictionBundle> predict_batch(const TrainedModel& model,
                                            const std::vector<Tensor>& images) {
    const ModelSpec& spec = model.spec;
    std::vector<PredictionBundle> out;
    out.reserve(images.size());
    if (images.empty()) return out;

    const bool beran = spec.head.kind == HeadKind::Beran;
    std::vector<std::vector<double>> bg_rows;
    std::vector<ConceptLogits> bg_logits;
    PerValueBandwidths tau;
    const bool per_value = beran && spec.head.bandwidth == BandwidthMode::PerValue;
    if (beran) {
        const std::size_t B = model.background_rep.dim(0);
        const std::size_t dim = model.background_rep.dim(1);
        bg_rows.resize(B);
        for (std::size_t b = 0; b < B; ++b)
            bg_rows[b].assign(model.background_rep.data() + b * dim,
                              model.background_rep.data() + (b + 1) * dim);
        if (per_value) {
            tau = bandwidths_from_params(model);
            bg_logits.reserve(B);
            for (std::size_t b = 0; b < B; ++b)
                bg_logits.push_back(logits_from_row(spec.schema, bg_rows[b].data()));
        }
    }

    const double* cox_b = nullptr;
    if (spec.head.kind == HeadKind::Cox) cox_b = model.params.value("cox.b").data();

    constexpr std::size_t kChunk = 128;
    for (std::size_t start = 0; start < images.size(); start += kChunk) {
        const std::size_t stop = std::min(start + kChunk, images.size());
        std::vector<std::size_t> idx(stop - start);
        std::iota(idx.begin(), idx.end(), start);

        ad::Graph g;
        const int x = g.input(stack_images(images, idx));
        const ForwardNodes fw = build_forward(g, model.params, spec, x);
        g.forward(model.params);
        const Tensor& head_in = g.value(fw.head_input);
        const std::size_t dim = head_in.cols();

        for (std::size_t r = 0; r < idx.size(); ++r) {
            PredictionBundle bundle;
            if (spec.uses_concepts()) {
                std::vector<std::vector<double>> blocks;
                for (int blk : fw.blocks) {
                    const Tensor& bt = g.value(blk);
                    blocks.emplace_back(bt.data() + r * bt.cols(), bt.data() + (r + 1) * bt.cols());
                }
                bundle.concept_logits = ConceptLogits(spec.schema, std::move(blocks));
                bundle.concept_argmax = bundle.concept_logits->argmax_values();
            }

            if (spec.head.kind == HeadKind::Cox) {
                double risk = 0.0;
                for (std::size_t c = 0; c < dim; ++c) risk += head_in.at2(r, c) * cox_b[c];
                bundle.sf = surv::cox_survival(risk, model.baseline);
            } else {
                std::vector<double> row(head_in.data() + r * dim, head_in.data() + (r + 1) * dim);
                surv::WeightVector w =
                    per_value
                        ? surv::per_value_weights(logits_from_row(spec.schema, row.data()),
                                                  bg_logits, tau)
                        : surv::gaussian_weights(row, bg_rows, spec.head.tau);
                bundle.sf = surv::beran_survival(w, model.background_events);
            }
            bundle.expected_time = surv::expected_event_time(bundle.sf);
            out.push_back(std::move(bundle));
        }
    }
    return out;
}

PredictionBundle predict(const TrainedModel& model, const Tensor& image) {
    return predict_batch(model, {image}).front();
}

double macro_f1(const std::vector<int>& truth, const std::vector<int>& pred, std::size_t k) {
    if (truth.size() != pred.size()) throw std::invalid_argument("macro_f1: length mismatch");
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const bool t = truth[i] == static_cast<int>(c);
            const bool p = pred[i] == static_cast<int>(c);
            if (t && p) ++tp;
            else if (!t && p) ++fp;
            else if (t && !p) ++fn;
        }
        if (tp + fp + fn == 0) continue;  // class absent from truth and prediction
        sum += 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
        ++present;
    }
    return present ? sum / static_cast<double>(present) : 0.0;
}

Metrics evaluate(const TrainedModel& model, const data::ConceptSurvivalDataset& test) {
    if (test.size() == 0) throw std::invalid_argument("evaluate: empty test dataset");
    const auto preds = predict_batch(model, test.images);

    std::vector<double> pred_times(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) pred_times[i] = preds[i].expected_time;

    Metrics metrics;
    metrics.c_index = surv::concordance_index(pred_times, test.event_samples());

    if (model.spec.uses_concepts()) {
        const std::size_t m = model.spec.schema.concept_count();
        metrics.f1_per_concept.resize(m);
        double mean = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            std::vector<int> truth(test.size()), guess(test.size());
            for (std::size_t i = 0; i < test.size(); ++i) {
                truth[i] = test.concepts[i][c];
                guess[i] = preds[i].concept_argmax[c];
            }
            metrics.f1_per_concept[c] = macro_f1(truth, guess, model.spec.schema.cardinalities[c]);
            mean += metrics.f1_per_concept[c];
        }
        metrics.f1_mean = mean / static_cast<double>(m);
    }
    return metrics;
}

}  // namespace scbm::model
