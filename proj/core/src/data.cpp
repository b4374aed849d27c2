#include "semcomm/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

#include "semcomm/errors.hpp"
#include "semcomm/random.hpp"

namespace semcomm::data {

namespace {

constexpr double kBright = 0.5;
constexpr double kBackground = 0.2;
constexpr double kPixelNoise = 0.03;
constexpr double kToneAmplitude = 0.5;
constexpr double kAudioNoise = 0.02;
constexpr std::array<double, kSpeechSymbols> kToneHz{300.0, 700.0, 1300.0, 2400.0};

struct Canvas {
    std::size_t c, h, w;
    std::vector<double>& px;

    double& at(std::size_t ch, std::size_t y, std::size_t x) { return px[(ch * h + y) * w + x]; }
};

std::vector<double> background(const Geometry& g, Rng& rng) {
    std::vector<double> px(g.channels * g.height * g.width);
    for (double& v : px) v = rng.uniform(0.0, kBackground);
    return px;
}

void brighten(const Geometry& g, std::vector<double>& px, std::size_t y0, std::size_t y1, std::size_t x0,
              std::size_t x1) {
    Canvas cv{g.channels, g.height, g.width, px};
    for (std::size_t ch = 0; ch < g.channels; ++ch)
        for (std::size_t y = y0; y < y1; ++y)
            for (std::size_t x = x0; x < x1; ++x) cv.at(ch, y, x) += kBright;
}

void finish_image(std::vector<double>& px, Rng& rng) {
    for (double& v : px) v = std::clamp(v + rng.normal(0.0, kPixelNoise), 0.0, 1.0);
}

// Quadrants in reading order: 0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right.
void brighten_quadrant(const Geometry& g, std::vector<double>& px, std::size_t q) {
    const std::size_t hh = g.height / 2, hw = g.width / 2;
    const std::size_t y0 = (q / 2) * hh, x0 = (q % 2) * hw;
    brighten(g, px, y0, y0 + hh, x0, x0 + hw);
}

std::vector<std::size_t> filler_text(const Geometry& g, Rng& rng) {
    std::vector<std::size_t> ids(g.text_length);
    for (auto& id : ids) id = kFirstFiller + rng.index(g.vocab - kFirstFiller);
    return ids;
}

Sample img_class(const Geometry& g, Rng& rng) {
    Sample s;
    s.label = rng.index(4);
    s.image = background(g, rng);
    brighten_quadrant(g, s.image, s.label);
    finish_image(s.image, rng);
    return s;
}

Sample text_recon(const Geometry& g, Rng& rng) {
    Sample s;
    s.text.resize(g.text_length);
    for (auto& id : s.text) id = kFirstWord + rng.index(g.vocab - kFirstWord);
    s.sequence = s.text;
    return s;
}

Sample speech_rec(const Geometry& g, Rng& rng) {
    Sample s;
    const std::size_t n = 1 + rng.index(g.max_symbols);
    // Adjacent symbols always differ, so a tone boundary is always audible.
    while (s.sequence.size() < n) {
        const std::size_t sym = rng.index(kSpeechSymbols);
        if (!s.sequence.empty() && sym == s.sequence.back()) continue;
        s.sequence.push_back(sym);
    }
    const std::size_t slot = g.speech_samples / g.max_symbols;
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    s.waveform.assign(g.speech_samples, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double f = kToneHz[s.sequence[k]];
        for (std::size_t i = 0; i < slot; ++i) {
            const double t = static_cast<double>(k * slot + i) / g.sample_rate;
            s.waveform[k * slot + i] = kToneAmplitude * std::sin(2.0 * std::numbers::pi * f * t + phase);
        }
    }
    for (double& v : s.waveform) v += rng.normal(0.0, kAudioNoise);
    return s;
}

Sample video_class(const Geometry& g, Rng& rng) {
    Sample s;
    s.label = rng.index(kVideoDirections);
    // 0 right, 1 left, 2 down, 3 up; one pixel per frame, 2x2 dot.
    const long dx = s.label == 0 ? 1 : s.label == 1 ? -1 : 0;
    const long dy = s.label == 2 ? 1 : s.label == 3 ? -1 : 0;
    const long travel = static_cast<long>(g.frames) - 1;
    auto start = [&](long extent, long step) {
        const long lo = step < 0 ? travel : 0;
        const long hi = extent - 2 - (step > 0 ? travel : 0);
        return lo + static_cast<long>(rng.index(static_cast<std::size_t>(hi - lo + 1)));
    };
    const long x0 = start(static_cast<long>(g.width), dx);
    const long y0 = start(static_cast<long>(g.height), dy);
    const std::size_t frame = g.channels * g.height * g.width;
    s.video.resize(g.frames * frame);
    for (std::size_t f = 0; f < g.frames; ++f) {
        std::vector<double> px = background(g, rng);
        const auto x = static_cast<std::size_t>(x0 + dx * static_cast<long>(f));
        const auto y = static_cast<std::size_t>(y0 + dy * static_cast<long>(f));
        Canvas cv{g.channels, g.height, g.width, px};
        for (std::size_t ch = 0; ch < g.channels; ++ch)
            for (std::size_t yy = y; yy < y + 2; ++yy)
                for (std::size_t xx = x; xx < x + 2; ++xx) cv.at(ch, yy, xx) = 1.0;
        finish_image(px, rng);
        std::copy(px.begin(), px.end(), s.video.begin() + static_cast<long>(f * frame));
    }
    return s;
}

Sample mm_xor(const Geometry& g, Rng& rng) {
    Sample s;
    const std::size_t a = rng.index(2), b = rng.index(2);
    s.label = a ^ b;
    s.image = background(g, rng);
    const std::size_t hw = g.width / 2;
    brighten(g, s.image, 0, g.height, a * hw, a * hw + hw);
    finish_image(s.image, rng);
    // Every word carries the bit: even ids for b = 0, odd ids for b = 1.
    const std::size_t half = (g.vocab - kFirstWord) / 2;
    s.text.resize(g.text_length);
    for (auto& id : s.text) id = kFirstWord + 2 * rng.index(half) + b;
    return s;
}

Sample mm_multilabel(const Geometry& g, Rng& rng) {
    Sample s;
    std::array<int, 3> q{};
    s.image = background(g, rng);
    for (std::size_t i = 0; i < 3; ++i) {
        q[i] = rng.coin() ? 1 : 0;
        if (q[i]) brighten_quadrant(g, s.image, i);
    }
    finish_image(s.image, rng);
    s.text = filler_text(g, rng);
    const int alpha = rng.coin() ? 1 : 0, beta = rng.coin() ? 1 : 0;
    const std::size_t pa = rng.index(g.text_length);
    std::size_t pb = rng.index(g.text_length - 1);
    if (pb >= pa) ++pb;
    if (alpha) s.text[pa] = kMarkerA;
    if (beta) s.text[pb] = kMarkerB;
    s.labels = {q[0], q[1], alpha, q[2] && beta ? 1 : 0};
    return s;
}

std::uint32_t u32(std::size_t v) { return static_cast<std::uint32_t>(v); }

io::Record doubles(const std::string& name, std::vector<std::uint32_t> extents, std::span<const double> v) {
    io::Record r{name, std::move(extents), {}};
    r.payload.assign(v.begin(), v.end());
    return r;
}

template <typename T>
io::Record integers(const std::string& name, std::span<const T> v) {
    io::Record r{name, {u32(v.size())}, {}};
    for (auto x : v) r.payload.push_back(static_cast<float>(x));
    return r;
}

}  // namespace

std::string_view to_string(DatasetKind k) {
    switch (k) {
        case DatasetKind::img_class: return "img_class";
        case DatasetKind::text_recon: return "text_recon";
        case DatasetKind::speech_rec: return "speech_rec";
        case DatasetKind::video_class: return "video_class";
        case DatasetKind::mm_xor: return "mm_xor";
        case DatasetKind::mm_multilabel: return "mm_multilabel";
    }
    return "?";
}

DatasetKind parse_kind(std::string_view name) {
    for (auto k : {DatasetKind::img_class, DatasetKind::text_recon, DatasetKind::speech_rec, DatasetKind::video_class,
                   DatasetKind::mm_xor, DatasetKind::mm_multilabel})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown dataset kind: " + std::string(name));
}

void Geometry::validate() const {
    if (channels == 0) throw ConfigError("image channels must be positive");
    if (height < 4 || width < 4 || height % 2 || width % 2)
        throw ConfigError("image extents must be even and at least 4");
    if (frames < 2 || frames + 1 > std::min(height, width))
        throw ConfigError("video needs 2 <= frames < min(height, width) for the moving dot");
    if (vocab < kFirstFiller + 2) throw ConfigError("vocabulary too small");
    if (text_length < 2) throw ConfigError("text length must be at least 2");
    if (max_symbols == 0 || speech_samples < max_symbols) throw ConfigError("speech geometry too small");
    if (!(sample_rate > 2.0 * kToneHz.back())) throw ConfigError("sample rate too low for the speech tones");
}

void DatasetSpec::validate() const {
    if (size == 0) throw ConfigError("dataset size must be at least 1");
    geometry.validate();
}

std::size_t num_classes(DatasetKind k, const Geometry& g) {
    switch (k) {
        case DatasetKind::img_class: return 4;
        case DatasetKind::text_recon: return g.vocab;
        case DatasetKind::speech_rec: return kSpeechSymbols;
        case DatasetKind::video_class: return kVideoDirections;
        case DatasetKind::mm_xor: return 2;
        case DatasetKind::mm_multilabel: return 4;
    }
    return 0;
}

double tone_hz(std::size_t symbol) { return kToneHz.at(symbol); }

Dataset gen_dataset(const DatasetSpec& spec) {
    spec.validate();
    Dataset d{spec, {}};
    d.samples.reserve(spec.size);
    Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(spec.kind)}));
    const Geometry& g = spec.geometry;
    for (std::size_t i = 0; i < spec.size; ++i) {
        switch (spec.kind) {
            case DatasetKind::img_class: d.samples.push_back(img_class(g, rng)); break;
            case DatasetKind::text_recon: d.samples.push_back(text_recon(g, rng)); break;
            case DatasetKind::speech_rec: d.samples.push_back(speech_rec(g, rng)); break;
            case DatasetKind::video_class: d.samples.push_back(video_class(g, rng)); break;
            case DatasetKind::mm_xor: d.samples.push_back(mm_xor(g, rng)); break;
            case DatasetKind::mm_multilabel: d.samples.push_back(mm_multilabel(g, rng)); break;
        }
    }
    return d;
}

std::pair<std::vector<Sample>, std::vector<Sample>> split(const std::vector<Sample>& samples, double train_fraction,
                                                          std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must be in (0, 1)");
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(samples.size())));
    if (n_train == 0 || n_train >= samples.size()) {
        throw ConfigError("split of " + std::to_string(samples.size()) + " samples leaves one side empty");
    }
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, {0x5b117}));
    std::shuffle(order.begin(), order.end(), rng.engine());
    std::pair<std::vector<Sample>, std::vector<Sample>> out;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_train ? out.first : out.second).push_back(samples[order[i]]);
    return out;
}

std::vector<std::vector<Sample>> batch(const std::vector<Sample>& pool, std::size_t batch_size) {
    if (batch_size == 0) throw ConfigError("batch size must be at least 1");
    std::vector<std::vector<Sample>> out;
    for (std::size_t i = 0; i < pool.size(); i += batch_size) {
        const std::size_t end = std::min(pool.size(), i + batch_size);
        out.emplace_back(pool.begin() + static_cast<long>(i), pool.begin() + static_cast<long>(end));
    }
    return out;
}

std::vector<io::Record> to_records(const Dataset& d) {
    const Geometry& g = d.spec.geometry;
    std::vector<io::Record> out;
    out.push_back({"meta/kind", {1}, {static_cast<float>(d.spec.kind)}});
    out.push_back(io::u64_record("meta/seed", d.spec.seed));
    const std::vector<std::size_t> geom{g.channels, g.height,         g.width,       g.frames,
                                        g.vocab,    g.text_length,    g.speech_samples, g.max_symbols,
                                        static_cast<std::size_t>(g.sample_rate)};
    out.push_back(integers<std::size_t>("meta/geometry", geom));
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        const Sample& s = d.samples[i];
        const std::string p = "sample/" + std::to_string(i) + "/";
        if (!s.image.empty()) out.push_back(doubles(p + "image", {u32(g.channels), u32(g.height), u32(g.width)}, s.image));
        if (!s.text.empty()) out.push_back(integers<std::size_t>(p + "text", s.text));
        if (!s.waveform.empty()) out.push_back(doubles(p + "waveform", {u32(s.waveform.size())}, s.waveform));
        if (!s.video.empty())
            out.push_back(doubles(p + "video", {u32(g.frames), u32(g.channels), u32(g.height), u32(g.width)}, s.video));
        out.push_back({p + "label", {1}, {static_cast<float>(s.label)}});
        if (!s.sequence.empty()) out.push_back(integers<std::size_t>(p + "sequence", s.sequence));
        if (!s.labels.empty()) out.push_back(integers<int>(p + "labels", s.labels));
    }
    return out;
}

Dataset from_records(std::span<const io::Record> records) {
    Dataset d;
    bool have_kind = false, have_geom = false;
    for (const auto& r : records) {
        if (r.name == "meta/kind") {
            d.spec.kind = static_cast<DatasetKind>(static_cast<int>(r.payload.at(0)));
            have_kind = true;
        } else if (r.name == "meta/seed") {
            d.spec.seed = io::u64_from(r);
        } else if (r.name == "meta/geometry") {
            if (r.payload.size() != 9) throw LoadError("malformed dataset geometry record");
            Geometry& g = d.spec.geometry;
            auto v = [&](int i) { return static_cast<std::size_t>(r.payload[i]); };
            g.channels = v(0), g.height = v(1), g.width = v(2), g.frames = v(3), g.vocab = v(4);
            g.text_length = v(5), g.speech_samples = v(6), g.max_symbols = v(7);
            g.sample_rate = static_cast<double>(r.payload[8]);
            have_geom = true;
        } else if (r.name.rfind("sample/", 0) == 0) {
            const auto slash = r.name.find('/', 7);
            if (slash == std::string::npos) throw LoadError("malformed sample record name: " + r.name);
            const std::size_t i = std::stoul(r.name.substr(7, slash - 7));
            const std::string field = r.name.substr(slash + 1);
            if (i >= d.samples.size()) d.samples.resize(i + 1);
            Sample& s = d.samples[i];
            auto as_size = [&] {
                std::vector<std::size_t> v;
                for (float f : r.payload) v.push_back(static_cast<std::size_t>(f));
                return v;
            };
            if (field == "image") s.image.assign(r.payload.begin(), r.payload.end());
            else if (field == "text") s.text = as_size();
            else if (field == "waveform") s.waveform.assign(r.payload.begin(), r.payload.end());
            else if (field == "video") s.video.assign(r.payload.begin(), r.payload.end());
            else if (field == "label") s.label = static_cast<std::size_t>(r.payload.at(0));
            else if (field == "sequence") s.sequence = as_size();
            else if (field == "labels")
                for (float f : r.payload) s.labels.push_back(static_cast<int>(f));
            else throw LoadError("unknown sample field: " + field);
        } else {
            throw LoadError("unknown dataset record: " + r.name);
        }
    }
    if (!have_kind || !have_geom) throw LoadError("dataset container lacks its metadata records");
    d.spec.size = d.samples.size();
    return d;
}

void save_dataset(const Dataset& d, const std::string& path) {
    const auto recs = to_records(d);
    io::write_file(path, io::encode(recs));
}

Dataset load_dataset(const std::string& path) {
    const auto recs = io::decode(io::read_file(path));
    return from_records(recs);
}

}  // namespace semcomm::data
