#include "scbm/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "scbm/rng.hpp"

namespace scbm::data {

namespace {

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// ------------------------------------------------------------- glyph drawing

constexpr std::size_t kGlyph = 28;

struct Canvas {
    double px[kGlyph][kGlyph] = {};

    void set(int y, int x, double v) {
        if (y >= 0 && y < static_cast<int>(kGlyph) && x >= 0 && x < static_cast<int>(kGlyph))
            px[y][x] = v;
    }

    void hline(int y, int x0, int x1, int thick = 2) {
        for (int t = 0; t < thick; ++t)
            for (int x = x0; x <= x1; ++x) set(y + t, x, 0.9);
    }
    void vline(int x, int y0, int y1, int thick = 2) {
        for (int t = 0; t < thick; ++t)
            for (int y = y0; y <= y1; ++y) set(y, x + t, 0.9);
    }
    void diag_down(int thick = 2) {  // top-left to bottom-right
        for (int i = 3; i < static_cast<int>(kGlyph) - 3; ++i)
            for (int t = 0; t < thick; ++t) set(i, i + t, 0.9);
    }
    void diag_up(int thick = 2) {  // top-right to bottom-left
        for (int i = 3; i < static_cast<int>(kGlyph) - 3; ++i)
            for (int t = 0; t < thick; ++t) set(i, static_cast<int>(kGlyph) - 1 - i + t, 0.9);
    }
    void ring(int cy, int cx, double r) {
        for (int y = 0; y < static_cast<int>(kGlyph); ++y)
            for (int x = 0; x < static_cast<int>(kGlyph); ++x) {
                const double d = std::sqrt(double((y - cy) * (y - cy) + (x - cx) * (x - cx)));
                if (std::fabs(d - r) < 1.3) px[y][x] = 0.9;
            }
    }
    void box(int y0, int x0, int y1, int x1) {
        hline(y0, x0, x1);
        hline(y1 - 1, x0, x1);
        vline(x0, y0, y1);
        vline(x1 - 1, y0, y1);
    }
    void fill_box(int y0, int x0, int y1, int x1) {
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) set(y, x, 0.9);
    }
};

void draw_base_pattern(Canvas& c, std::size_t category) {
    switch (category % 10) {
        case 0: c.ring(14, 14, 9.0); break;
        case 1: c.vline(13, 4, 23, 3); break;
        case 2: c.hline(13, 4, 23, 3); break;
        case 3: c.diag_down(3); break;
        case 4: c.diag_up(3); break;
        case 5:
            c.vline(13, 4, 23, 3);
            c.hline(13, 4, 23, 3);
            break;
        case 6:
            c.diag_down(3);
            c.diag_up(3);
            break;
        case 7: c.box(5, 5, 23, 23); break;
        case 8:
            c.hline(8, 4, 23, 3);
            c.hline(18, 4, 23, 3);
            break;
        case 9:
            c.vline(8, 4, 23, 3);
            c.vline(18, 4, 23, 3);
            break;
    }
    // categories beyond 10 reuse a base pattern plus corner markers
    for (std::size_t extra = 0; extra < category / 10; ++extra) {
        const int off = 1 + static_cast<int>(extra) * 5;
        c.fill_box(1, off, 3, off + 2);
    }
}

Tensor render_glyph(std::size_t category, Rng& rng) {
    Canvas c;
    draw_base_pattern(c, category);
    const int dy = static_cast<int>(rng.below(5)) - 2;
    const int dx = static_cast<int>(rng.below(5)) - 2;
    Tensor img({kGlyph, kGlyph, 1});
    for (std::size_t y = 0; y < kGlyph; ++y)
        for (std::size_t x = 0; x < kGlyph; ++x) {
            const int sy = static_cast<int>(y) - dy;
            const int sx = static_cast<int>(x) - dx;
            double base = 0.0;
            if (sy >= 0 && sy < static_cast<int>(kGlyph) && sx >= 0 && sx < static_cast<int>(kGlyph))
                base = c.px[sy][sx];
            img[(y * kGlyph + x)] = clamp01(base + rng.uniform(-0.08, 0.08));
        }
    return img;
}

// --------------------------------------------------------------- IDX parsing

std::uint32_t read_be_u32(std::ifstream& f, const std::string& path, std::size_t& offset) {
    unsigned char buf[4];
    f.read(reinterpret_cast<char*>(buf), 4);
    if (f.gcount() != 4)
        throw std::runtime_error("IDX file " + path + " truncated at byte offset " +
                                 std::to_string(offset));
    offset += 4;
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace

void ConceptSurvivalDataset::validate() const {
    const std::size_t n = images.size();
    if (concepts.size() != n || times.size() != n || events.size() != n)
        throw std::invalid_argument("ConceptSurvivalDataset: misaligned field lengths");
    for (std::size_t i = 0; i < n; ++i) {
        if (concepts[i].size() != schema.concept_count())
            throw std::invalid_argument("ConceptSurvivalDataset: concept row width mismatch");
        for (std::size_t j = 0; j < concepts[i].size(); ++j)
            if (concepts[i][j] < 0 ||
                static_cast<std::size_t>(concepts[i][j]) >= schema.cardinalities[j])
                throw std::invalid_argument("ConceptSurvivalDataset: concept value out of range");
        if (!(times[i] >= 0.0))
            throw std::invalid_argument("ConceptSurvivalDataset: negative time");
    }
}

std::vector<surv::EventSample> ConceptSurvivalDataset::event_samples() const {
    std::vector<surv::EventSample> out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) out[i] = {times[i], static_cast<bool>(events[i])};
    return out;
}

ConceptSurvivalDataset ConceptSurvivalDataset::subset(const std::vector<std::size_t>& indices) const {
    ConceptSurvivalDataset out;
    out.schema = schema;
    out.images.reserve(indices.size());
    for (std::size_t i : indices) {
        out.images.push_back(images.at(i));
        out.concepts.push_back(concepts.at(i));
        out.times.push_back(times.at(i));
        out.events.push_back(events.at(i));
    }
    return out;
}

SourcePool load_idx_pool(const std::string& images_path, const std::string& labels_path) {
    std::ifstream fi(images_path, std::ios::binary);
    if (!fi) throw std::runtime_error("cannot open IDX image file " + images_path);
    std::size_t off = 0;
    const std::uint32_t magic_i = read_be_u32(fi, images_path, off);
    if (magic_i != 2051)
        throw std::runtime_error("IDX magic mismatch in " + images_path +
                                 ": expected 2051 (0x00000803), found " + std::to_string(magic_i));
    const std::uint32_t count = read_be_u32(fi, images_path, off);
    const std::uint32_t rows = read_be_u32(fi, images_path, off);
    const std::uint32_t cols = read_be_u32(fi, images_path, off);

    std::ifstream fl(labels_path, std::ios::binary);
    if (!fl) throw std::runtime_error("cannot open IDX label file " + labels_path);
    std::size_t loff = 0;
    const std::uint32_t magic_l = read_be_u32(fl, labels_path, loff);
    if (magic_l != 2049)
        throw std::runtime_error("IDX magic mismatch in " + labels_path +
                                 ": expected 2049 (0x00000801), found " + std::to_string(magic_l));
    const std::uint32_t lcount = read_be_u32(fl, labels_path, loff);
    if (lcount != count)
        throw std::runtime_error("IDX count mismatch: " + std::to_string(count) + " images vs " +
                                 std::to_string(lcount) + " labels");

    SourcePool pool;
    pool.images.reserve(count);
    pool.labels.reserve(count);
    std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols);
    int max_label = -1;
    for (std::uint32_t i = 0; i < count; ++i) {
        fi.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (fi.gcount() != static_cast<std::streamsize>(buf.size()))
            throw std::runtime_error("IDX file " + images_path + " truncated at byte offset " +
                                     std::to_string(off));
        off += buf.size();
        Tensor img({rows, cols, 1});
        for (std::size_t p = 0; p < buf.size(); ++p) img[p] = buf[p] / 255.0;
        pool.images.push_back(std::move(img));

        char lb;
        fl.read(&lb, 1);
        if (fl.gcount() != 1)
            throw std::runtime_error("IDX file " + labels_path + " truncated at byte offset " +
                                     std::to_string(loff));
        ++loff;
        pool.labels.push_back(static_cast<unsigned char>(lb));
        max_label = std::max(max_label, pool.labels.back());
    }
    pool.category_count = static_cast<std::size_t>(max_label) + 1;
    return pool;
}

SourcePool synth_glyph_pool(std::size_t categories, std::size_t per_category, std::uint64_t seed) {
    if (categories < 2) throw std::invalid_argument("synth_glyph_pool: need at least 2 categories");
    Rng rng(seed);
    SourcePool pool;
    pool.category_count = categories;
    pool.images.reserve(categories * per_category);
    pool.labels.reserve(categories * per_category);
    for (std::size_t c = 0; c < categories; ++c)
        for (std::size_t i = 0; i < per_category; ++i) {
            pool.images.push_back(render_glyph(c, rng));
            pool.labels.push_back(static_cast<int>(c));
        }
    return pool;
}

void tag_pool_cifar_style(SourcePool& pool) {
    if (pool.category_count != 10)
        throw std::invalid_argument("tag_pool_cifar_style: expects exactly 10 categories");
    // category order mirrors the usual 10-class layout:
    // plane, car, bird, cat, deer, dog, frog, horse, ship, truck
    pool.tags.assign(10, CategoryTags{});
    auto& t = pool.tags;
    t[0] = {false, true, true, false};
    t[1] = {false, true, false, false};
    t[2] = {true, false, true, false};
    t[3] = {true, false, false, true};
    t[4] = {true, false, false, false};
    t[5] = {true, false, false, false};
    t[6] = {true, false, false, false};
    t[7] = {true, false, false, false};
    t[8] = {false, true, false, false};
    t[9] = {false, true, false, false};
}

namespace {

std::vector<std::vector<std::size_t>> indices_by_category(const SourcePool& pool) {
    std::vector<std::vector<std::size_t>> by_cat(pool.category_count);
    for (std::size_t i = 0; i < pool.images.size(); ++i)
        by_cat[static_cast<std::size_t>(pool.labels[i])].push_back(i);
    return by_cat;
}

Tensor tile4(const SourcePool& pool, const std::size_t idx[4]) {
    const Tensor& first = pool.images[idx[0]];
    const std::size_t h = first.dim(0), w = first.dim(1), c = first.dim(2);
    Tensor out({2 * h, 2 * w, c});
    for (int t = 0; t < 4; ++t) {
        const Tensor& src = pool.images[idx[t]];
        const std::size_t oy = (t / 2) * h, ox = (t % 2) * w;
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                for (std::size_t ch = 0; ch < c; ++ch)
                    out[((oy + y) * 2 * w + ox + x) * c + ch] = src[(y * w + x) * c + ch];
    }
    return out;
}

}  // namespace

Composite compose_mnist_style(const SourcePool& pool, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("compose_mnist_style: n must be positive");
    if (pool.category_count < 4)
        throw std::invalid_argument("compose_mnist_style: pool needs at least 4 categories");
    const auto by_cat = indices_by_category(pool);
    for (const auto& v : by_cat)
        if (v.empty()) throw std::invalid_argument("compose_mnist_style: empty category in pool");

    Rng rng(seed);
    Composite out;
    std::vector<std::string> names;
    std::vector<std::size_t> cards;
    for (int i = 0; i < 4; ++i) {
        names.push_back("digit" + std::to_string(i + 1));
        cards.push_back(pool.category_count);
    }
    out.schema = ConceptSchema(names, cards);

    for (std::size_t inst = 0; inst < n; ++inst) {
        // four pairwise-distinct categories, by rejection
        std::size_t cats[4];
        for (int t = 0; t < 4; ++t) {
            bool fresh = false;
            while (!fresh) {
                cats[t] = rng.below(pool.category_count);
                fresh = true;
                for (int s = 0; s < t; ++s)
                    if (cats[s] == cats[t]) fresh = false;
            }
        }
        std::size_t idx[4];
        std::vector<int> cvec(4);
        for (int t = 0; t < 4; ++t) {
            const auto& candidates = by_cat[cats[t]];
            idx[t] = candidates[rng.below(candidates.size())];
            cvec[t] = static_cast<int>(cats[t]);
        }
        out.images.push_back(tile4(pool, idx));
        out.concepts.push_back(std::move(cvec));
    }
    return out;
}

Composite compose_cifar_style(const SourcePool& pool, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("compose_cifar_style: n must be positive");
    if (pool.tags.size() != pool.category_count || pool.tags.empty())
        throw std::invalid_argument("compose_cifar_style: pool is missing category tags");

    Rng rng(seed);
    Composite out;
    out.schema = ConceptSchema({"animals", "vehicles", "flying", "cat"}, {5, 5, 5, 2});

    for (std::size_t inst = 0; inst < n; ++inst) {
        std::size_t idx[4];
        int animals = 0, vehicles = 0, flying = 0, cat = 0;
        for (int t = 0; t < 4; ++t) {
            idx[t] = rng.below(pool.images.size());
            const CategoryTags& tag = pool.tags[static_cast<std::size_t>(pool.labels[idx[t]])];
            animals += tag.animal ? 1 : 0;
            vehicles += tag.vehicle ? 1 : 0;
            flying += tag.flying ? 1 : 0;
            cat |= tag.cat ? 1 : 0;
        }
        out.images.push_back(tile4(pool, idx));
        out.concepts.push_back({animals, vehicles, flying, cat});
    }
    return out;
}

namespace {

double risk_term(const std::vector<int>& c, const ConceptSchema& schema,
                 const GenerationConfig& cfg) {
    double s = 0.0;
    if (cfg.encoding == ConceptEncoding::Integer) {
        for (std::size_t i = 0; i < c.size(); ++i) s += cfg.coefficients[i] * c[i];
    } else {
        for (std::size_t i = 0; i < c.size(); ++i) {
            const std::size_t off = schema.block_offset(i);
            s += cfg.coefficients[off + static_cast<std::size_t>(c[i])] * c[i];
        }
    }
    return s;
}

void check_coefficients(const ConceptSchema& schema, const GenerationConfig& cfg) {
    const std::size_t want = cfg.encoding == ConceptEncoding::Integer ? schema.concept_count()
                                                                      : schema.total_width();
    if (cfg.coefficients.size() != want)
        throw std::invalid_argument("GenerationConfig: coefficient vector has length " +
                                    std::to_string(cfg.coefficients.size()) + ", expected " +
                                    std::to_string(want));
    if (!(cfg.nu > 0.0) || !(cfg.lambda > 0.0))
        throw std::invalid_argument("GenerationConfig: nu and lambda must be positive");
}

}  // namespace

std::vector<double> generate_event_times(const std::vector<std::vector<int>>& concepts,
                                         const ConceptSchema& schema, const GenerationConfig& cfg) {
    check_coefficients(schema, cfg);
    Rng rng(cfg.seed);
    std::vector<double> times(concepts.size());
    for (std::size_t i = 0; i < concepts.size(); ++i) {
        const double btc = risk_term(concepts[i], schema, cfg);
        const double rate = cfg.law == TimeLaw::Weibull ? cfg.lambda * std::exp(btc)
                                                        : cfg.lambda * (std::sin(btc) + 1.001);
        const double u = rng.uniform_open();
        times[i] = std::pow(-std::log(u) / rate, 1.0 / cfg.nu);
    }
    return times;
}

std::vector<bool> apply_censoring(const std::vector<double>& times, double rho,
                                  std::uint64_t seed) {
    if (!(rho > 0.0 && rho <= 1.0))
        throw std::invalid_argument("apply_censoring: rho must lie in (0,1]");
    Rng rng(seed);
    std::vector<bool> events(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) events[i] = rng.bernoulli(rho);
    return events;
}

ConceptSurvivalDataset build_dataset(DatasetKind kind, const SourcePool& pool, std::size_t n,
                                     const GenerationConfig& cfg) {
    Rng root(cfg.seed);
    Composite comp = kind == DatasetKind::CifarStyle
                         ? compose_cifar_style(pool, n, root.split(1).next_u64())
                         : compose_mnist_style(pool, n, root.split(1).next_u64());

    GenerationConfig gen = cfg;
    gen.seed = root.split(2).next_u64();
    ConceptSurvivalDataset ds;
    ds.schema = comp.schema;
    ds.images = std::move(comp.images);
    ds.concepts = std::move(comp.concepts);
    ds.times = generate_event_times(ds.concepts, ds.schema, gen);
    ds.events = apply_censoring(ds.times, cfg.uncensored_rho, root.split(3).next_u64());
    ds.validate();
    return ds;
}

GenerationConfig default_generation(DatasetKind kind) {
    GenerationConfig cfg;
    cfg.encoding = ConceptEncoding::Integer;
    switch (kind) {
        case DatasetKind::Mnist:
            cfg.coefficients = {0.5, 1.5, -1.0, 0.001};
            cfg.nu = 2.0;
            cfg.lambda = 1e-4;
            cfg.law = TimeLaw::Weibull;
            break;
        case DatasetKind::MnistSin:
            cfg.coefficients = {0.5, 1.5, -1.0, 0.001};
            cfg.nu = 4.0;
            cfg.lambda = 0.01;
            cfg.law = TimeLaw::WeibullSin;
            break;
        case DatasetKind::CifarStyle:
            cfg.coefficients = {-0.7, 1.5, -2.0, 5.0};
            cfg.nu = 2.0;
            cfg.lambda = 0.01;
            cfg.law = TimeLaw::Weibull;
            break;
    }
    return cfg;
}

GenerationConfig onehot_mnist_generation() {
    GenerationConfig cfg;
    cfg.encoding = ConceptEncoding::OneHot;
    cfg.coefficients.clear();
    const double blocks[4] = {0.5, 1.5, 0.0001, 0.001};
    for (double b : blocks)
        for (int j = 0; j < 10; ++j) cfg.coefficients.push_back(b);
    cfg.nu = 2.0;
    cfg.lambda = 1e-4;
    cfg.law = TimeLaw::Weibull;
    return cfg;
}

GenerationConfig onehot_cifar_generation() {
    GenerationConfig cfg;
    cfg.encoding = ConceptEncoding::OneHot;
    cfg.coefficients.clear();
    const double blocks[4] = {0.001, 0.0001, 3.0, 5.0};
    const int widths[4] = {5, 5, 5, 2};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < widths[i]; ++j) cfg.coefficients.push_back(blocks[i]);
    cfg.nu = 4.0;
    cfg.lambda = 1e-3;
    cfg.law = TimeLaw::Weibull;
    return cfg;
}

}  // namespace scbm::data
