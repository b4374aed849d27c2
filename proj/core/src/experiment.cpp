#include "semcomm/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "semcomm/errors.hpp"
#include "semcomm/metrics.hpp"
#include "semcomm/ops.hpp"

namespace semcomm::experiment {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and rejects any it was not asked about.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) throw ConfigError(where_ + " must be a JSON object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where_ + "." + key + ": " + e.what());
        }
    }
    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }
    void finish() const {
        for (const auto& [k, _] : j_.items())
            if (!seen_.count(k)) throw ConfigError("unknown key '" + k + "' in " + where_);
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

void read_geometry(const json& j, data::Geometry& g) {
    ObjectReader r(j, "model.input");
    r.get("channels", g.channels);
    r.get("height", g.height);
    r.get("width", g.width);
    r.get("frames", g.frames);
    r.get("vocab", g.vocab);
    r.get("text_length", g.text_length);
    r.get("speech_samples", g.speech_samples);
    r.get("sample_rate", g.sample_rate);
    r.get("max_symbols", g.max_symbols);
    r.finish();
}

void read_model(const json& j, model::ModelConfig& m) {
    ObjectReader r(j, "model");
    r.get("width", m.width);
    r.get("compressed", m.compressed);
    r.get("encoder_layers", m.encoder_layers);
    r.get("encoder_heads", m.encoder_heads);
    r.get("fusion_layers", m.fusion_layers);
    r.get("fusion_heads", m.fusion_heads);
    r.get("head_scale", m.head_scale);
    r.get("head_hidden", m.head_hidden);
    r.get("stem_stride", m.stem_stride);
    r.get("block_stride", m.block_stride);
    r.get("text_segments", m.text_segments);
    r.get("frame", m.frame);
    r.get("hop", m.hop);
    r.get("mel_filters", m.mel_filters);
    r.get("conv_channels", m.conv_channels);
    r.get("conv_kernel", m.conv_kernel);
    r.get("tube_frames", m.tube_frames);
    r.get("tube_height", m.tube_height);
    r.get("tube_width", m.tube_width);
    r.get("swap_masks", m.swap_masks);
    if (const json* in = r.child("input")) read_geometry(*in, m.input);
    r.finish();
}

TaskEntry read_task(const json& j, std::size_t i) {
    TaskEntry t;
    ObjectReader r(j, "tasks[" + std::to_string(i) + "]");
    r.get("preset", t.preset);
    t.name = t.preset;
    r.get("name", t.name);
    std::vector<std::string> mods;
    r.get("modalities", mods);
    for (const auto& m : mods) t.modalities.push_back(parse_modality(m));
    r.get("dataset_size", t.dataset_size);
    r.get("dataset_seed", t.dataset_seed);
    r.get("train_fraction", t.train_fraction);
    r.get("lr", t.lr);
    r.finish();
    if (t.preset.empty()) throw ConfigError("tasks[" + std::to_string(i) + "] needs a preset");
    return t;
}

void read_train(const json& j, train::TrainConfig& t) {
    ObjectReader r(j, "train");
    r.get("steps", t.steps);
    r.get("batch_size", t.batch_size);
    std::string ch(channel::to_string(t.channel));
    r.get("channel", ch);
    t.channel = channel::parse_kind(ch);
    r.get("snr_min_db", t.snr_min_db);
    r.get("snr_max_db", t.snr_max_db);
    if (const json* f = r.child("fixed_snr_db"); f && !f->is_null()) t.fixed_snr_db = f->get<double>();
    r.get("noiseless", t.noiseless);
    r.finish();
}

void read_eval(const json& j, EvalConfig& e) {
    ObjectReader r(j, "eval");
    r.get("snrs", e.snrs);
    if (const json* c = r.child("channels")) {
        e.channels.clear();
        for (const auto& s : c->get<std::vector<std::string>>()) e.channels.push_back(channel::parse_kind(s));
    }
    r.get("max_samples", e.max_samples);
    r.finish();
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    return f;
}

}  // namespace

void ExperimentConfig::validate() const {
    model.validate();
    if (tasks.empty()) throw ConfigError("experiment needs at least one task");
    std::set<std::string> names;
    for (const auto& t : tasks) {
        if (!names.insert(t.name).second) throw ConfigError("duplicate task name: " + t.name);
        const auto presets = model::preset_names();
        if (std::find(presets.begin(), presets.end(), t.preset) == presets.end())
            throw ConfigError("task '" + t.name + "': unknown preset '" + t.preset + "'");
        if (t.dataset_size < 2) throw ConfigError("task '" + t.name + "': dataset needs at least 2 samples");
        if (!(t.train_fraction > 0.0 && t.train_fraction < 1.0))
            throw ConfigError("task '" + t.name + "': train_fraction must be in (0, 1)");
        if (t.lr < 0.0) throw ConfigError("task '" + t.name + "': learning rate must be positive");
        dataset_spec(*this, t).validate();
    }
    const auto specs = task_specs();
    for (const auto& s : specs) s.validate();
    if (train.batch_size == 0) throw ConfigError("train.batch_size must be at least 1");
    if (!(train.snr_min_db <= train.snr_max_db)) throw ConfigError("train SNR range is empty");
    if (eval.snrs.empty()) throw ConfigError("eval.snrs must not be empty");
    if (eval.channels.empty()) throw ConfigError("eval.channels must not be empty");
}

std::vector<task::TaskSpec> ExperimentConfig::task_specs() const {
    std::vector<task::TaskSpec> out;
    for (const auto& t : tasks) {
        task::TaskSpec s = model::preset_task(t.preset, model.input);
        s.name = t.name;
        if (!t.modalities.empty()) s.modalities = t.modalities;
        s.id = out.size();
        out.push_back(std::move(s));
    }
    return out;
}

ExperimentConfig from_json(const json& j) {
    ExperimentConfig cfg;
    ObjectReader r(j, "config");
    std::uint64_t seed = 0;
    r.get("seed", seed);
    std::string out = cfg.output_dir.string();
    r.get("output_dir", out);
    cfg.output_dir = out;
    if (const json* m = r.child("model")) read_model(*m, cfg.model);
    if (const json* t = r.child("train")) read_train(*t, cfg.train);
    if (const json* e = r.child("eval")) read_eval(*e, cfg.eval);
    if (const json* ts = r.child("tasks")) {
        if (!ts->is_array()) throw ConfigError("config.tasks must be an array");
        for (std::size_t i = 0; i < ts->size(); ++i) cfg.tasks.push_back(read_task((*ts)[i], i));
    }
    r.finish();
    set_seed(cfg, seed);
    cfg.validate();
    return cfg;
}

json to_json(const ExperimentConfig& cfg) {
    const auto& m = cfg.model;
    const auto& g = m.input;
    json j;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir.string();
    j["model"] = {{"width", m.width},
                  {"compressed", m.compressed},
                  {"encoder_layers", m.encoder_layers},
                  {"encoder_heads", m.encoder_heads},
                  {"fusion_layers", m.fusion_layers},
                  {"fusion_heads", m.fusion_heads},
                  {"head_scale", m.head_scale},
                  {"head_hidden", m.head_hidden},
                  {"stem_stride", m.stem_stride},
                  {"block_stride", m.block_stride},
                  {"text_segments", m.text_segments},
                  {"frame", m.frame},
                  {"hop", m.hop},
                  {"mel_filters", m.mel_filters},
                  {"conv_channels", m.conv_channels},
                  {"conv_kernel", m.conv_kernel},
                  {"tube_frames", m.tube_frames},
                  {"tube_height", m.tube_height},
                  {"tube_width", m.tube_width},
                  {"swap_masks", m.swap_masks},
                  {"input",
                   {{"channels", g.channels},
                    {"height", g.height},
                    {"width", g.width},
                    {"frames", g.frames},
                    {"vocab", g.vocab},
                    {"text_length", g.text_length},
                    {"speech_samples", g.speech_samples},
                    {"sample_rate", g.sample_rate},
                    {"max_symbols", g.max_symbols}}}};
    j["train"] = {{"steps", cfg.train.steps},
                  {"batch_size", cfg.train.batch_size},
                  {"channel", channel::to_string(cfg.train.channel)},
                  {"snr_min_db", cfg.train.snr_min_db},
                  {"snr_max_db", cfg.train.snr_max_db},
                  {"fixed_snr_db", cfg.train.fixed_snr_db ? json(*cfg.train.fixed_snr_db) : json(nullptr)},
                  {"noiseless", cfg.train.noiseless}};
    std::vector<std::string> chans;
    for (auto k : cfg.eval.channels) chans.emplace_back(channel::to_string(k));
    j["eval"] = {{"snrs", cfg.eval.snrs}, {"channels", chans}, {"max_samples", cfg.eval.max_samples}};
    j["tasks"] = json::array();
    for (const auto& t : cfg.tasks) {
        std::vector<std::string> mods;
        for (auto mm : t.modalities) mods.emplace_back(to_string(mm));
        j["tasks"].push_back({{"name", t.name},
                              {"preset", t.preset},
                              {"modalities", mods},
                              {"dataset_size", t.dataset_size},
                              {"dataset_seed", t.dataset_seed},
                              {"train_fraction", t.train_fraction},
                              {"lr", t.lr}});
    }
    return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

void set_seed(ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.model.seed = seed;
    cfg.train.seed = seed;
}

void apply_seed_override(ExperimentConfig& cfg) {
    const char* env = std::getenv("SEMCOMM_SEED");
    if (!env || !*env) return;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw ConfigError("SEMCOMM_SEED must be a non-negative integer, got '" + std::string(env) + "'");
    set_seed(cfg, v);
}

data::DatasetSpec dataset_spec(const ExperimentConfig& cfg, const TaskEntry& t) {
    data::DatasetSpec s;
    s.kind = model::preset_dataset(t.preset);
    s.size = t.dataset_size;
    s.seed = t.dataset_seed;
    s.geometry = cfg.model.input;
    return s;
}

TaskData make_task_data(const ExperimentConfig& cfg, const TaskEntry& t) {
    const auto ds = data::gen_dataset(dataset_spec(cfg, t));
    auto [tr, ev] = data::split(ds.samples, t.train_fraction, t.dataset_seed);
    if (cfg.eval.max_samples && ev.size() > cfg.eval.max_samples) ev.resize(cfg.eval.max_samples);
    return {std::move(tr), std::move(ev)};
}

OverheadRow overhead_from_lengths(const std::string& task, std::span<const std::size_t> lengths, bool fused,
                                  std::size_t symbol_width, std::size_t symbol_bits) {
    if (symbol_bits != 8 && symbol_bits != 16 && symbol_bits != 32)
        throw ConfigError("symbol bits must be 8, 16 or 32");
    OverheadRow r;
    r.task = task;
    r.fused = fused;
    r.symbol_width = symbol_width;
    r.bytes_per_symbol = symbol_bits / 8;
    r.unfused_rows = std::accumulate(lengths.begin(), lengths.end(), std::size_t{1});
    r.transmitted_rows = fused ? 1 : r.unfused_rows;
    r.fused_bytes = r.transmitted_rows * symbol_width * r.bytes_per_symbol;
    r.unfused_bytes = r.unfused_rows * symbol_width * r.bytes_per_symbol;
    const std::size_t g = std::gcd(r.fused_bytes, r.unfused_bytes);
    r.ratio_num = g ? r.fused_bytes / g : 1;
    r.ratio_den = g ? r.unfused_bytes / g : 1;
    return r;
}

OverheadRow overhead(const task::TaskSpec& spec, const model::ModelConfig& cfg, std::size_t symbol_bits) {
    std::vector<std::size_t> lengths;
    for (Modality m : spec.modalities) lengths.push_back(cfg.modality_length(m));
    return overhead_from_lengths(spec.name, lengths, spec.multimodal(), cfg.symbols(), symbol_bits);
}

std::string format_value(double v) {
    if (v == metric::kPsnrInfinite) v = metric::kPsnrCap;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s = buf;
    if (s == "-0.000000") s = "0.000000";
    return s;
}

void write_results_csv(std::ostream& os, std::span<const train::ResultRow> rows) {
    std::vector<train::ResultRow> sorted(rows.begin(), rows.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.task != b.task) return a.task < b.task;
        if (a.channel != b.channel) return a.channel < b.channel;
        return a.snr_db < b.snr_db;
    });
    os << "task,channel,snr_db,metric_name,value,seed\n";
    for (const auto& r : sorted) {
        os << csv_escape(r.task) << ',' << r.channel << ',' << format_value(r.snr_db) << ',' << r.metric << ','
           << format_value(r.value) << ',' << r.seed << '\n';
    }
}

void write_results_csv(const std::filesystem::path& path, std::span<const train::ResultRow> rows) {
    auto f = open_out(path);
    write_results_csv(f, rows);
    if (!f) throw IoError("failed writing " + path.string());
}

void write_loss_csv(const std::filesystem::path& path, const model::Model& m, std::span<const train::LossEntry> log) {
    auto f = open_out(path);
    f << "step,epoch,task,snr_db,loss\n";
    for (const auto& e : log) {
        f << e.step << ',' << e.epoch << ',' << csv_escape(m.tasks().at(e.task).name) << ',' << format_value(e.snr_db)
          << ',' << format_value(e.loss) << '\n';
    }
    if (!f) throw IoError("failed writing " + path.string());
}

void write_overhead_csv(const std::filesystem::path& path, std::span<const OverheadRow> rows) {
    auto f = open_out(path);
    f << "task,fused,transmitted_rows,unfused_rows,symbol_width,bytes_per_symbol,fused_bytes,unfused_bytes,ratio\n";
    for (const auto& r : rows) {
        f << csv_escape(r.task) << ',' << (r.fused ? 1 : 0) << ',' << r.transmitted_rows << ',' << r.unfused_rows << ','
          << r.symbol_width << ',' << r.bytes_per_symbol << ',' << r.fused_bytes << ',' << r.unfused_bytes << ','
          << r.ratio_num << '/' << r.ratio_den << '\n';
    }
    if (!f) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------- gradcheck

namespace {

using ad::Tensor;

Tensor random_input(ad::Shape shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
    Tensor t = Tensor::zeros(std::move(shape), true);
    for (double& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

struct Checker {
    double rel_tol, abs_floor;
    double h = 1e-5;
    Rng& rng;

    // Checks d(probe . forward())/d(input) at `coords` of each input
    // (all coordinates when `max_coords` is 0).
    GradcheckCase run(const std::string& name, const std::function<Tensor()>& forward, std::vector<Tensor> inputs,
                      std::size_t max_coords = 0) {
        Tensor probe;
        {
            ad::NoGradGuard ng;
            const Tensor y = forward();
            probe = Tensor::zeros(y.shape());
            for (double& v : probe.data()) v = rng.uniform(-1.0, 1.0);
        }
        auto scalar = [&] {
            ad::NoGradGuard ng;
            const Tensor y = forward();
            double s = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * probe[i];
            return s;
        };
        for (auto& t : inputs) t.clear_grad();
        ad::tape().clear();
        ad::backward(ad::sum(ad::mul(forward(), probe)));

        GradcheckCase c;
        c.name = name;
        for (std::size_t k = 0; k < inputs.size(); ++k) {
            Tensor& t = inputs[k];
            std::vector<std::size_t> coords(t.size());
            std::iota(coords.begin(), coords.end(), 0);
            if (max_coords && coords.size() > max_coords) {
                std::shuffle(coords.begin(), coords.end(), rng.engine());
                coords.resize(max_coords);
            }
            for (std::size_t i : coords) {
                const double analytic = t.has_grad() ? t.grad()[i] : 0.0;
                const double saved = t[i];
                t[i] = saved + h;
                const double up = scalar();
                t[i] = saved - h;
                const double down = scalar();
                t[i] = saved;
                const double numeric = (up - down) / (2.0 * h);
                const double diff = std::abs(analytic - numeric);
                ++c.checked;
                const double mag = std::max(std::abs(analytic), std::abs(numeric));
                const double rel = mag > 0.0 ? diff / mag : 0.0;
                c.worst_rel = std::max(c.worst_rel, rel);
                if (diff > abs_floor && rel >= rel_tol) {
                    if (!c.failures) {
                        std::ostringstream s;
                        s << "input " << k << " [" << i << "]: autodiff " << analytic << " vs numeric " << numeric;
                        c.first_failure = s.str();
                    }
                    ++c.failures;
                }
            }
        }
        for (auto& t : inputs) t.clear_grad();
        return c;
    }
};

data::Sample sample_for(const std::string& preset, const data::Geometry& g, std::uint64_t seed) {
    data::DatasetSpec spec;
    spec.kind = model::preset_dataset(preset);
    spec.size = 1;
    spec.seed = seed;
    spec.geometry = g;
    return data::gen_dataset(spec).samples[0];
}

}  // namespace

std::vector<GradcheckCase> gradcheck_suite(const model::ModelConfig& cfg, std::uint64_t seed, double rel_tol,
                                           double abs_floor) {
    Rng rng(derive_seed(seed, {0x6c4ec}));
    Checker ck{rel_tol, abs_floor, 1e-5, rng};
    std::vector<GradcheckCase> out;

    {
        Tensor a = random_input({3, 4}, rng), b = random_input({4, 5}, rng);
        out.push_back(ck.run("matmul", [&] { return ad::matmul(a, b); }, {a, b}));
    }
    {
        Tensor a = random_input({3, 4}, rng), b = random_input({4}, rng), c = random_input({3, 4}, rng);
        out.push_back(ck.run("add_broadcast", [&] { return ad::add(a, b); }, {a, b}));
        out.push_back(ck.run("sub", [&] { return ad::sub(a, c); }, {a, c}));
        out.push_back(ck.run("mul_broadcast", [&] { return ad::mul(a, b); }, {a, b}));
        out.push_back(ck.run("scale", [&] { return ad::scale(a, -1.7); }, {a}));
        out.push_back(ck.run("transpose", [&] { return ad::transpose(a); }, {a}));
    }
    {
        Tensor x = random_input({3, 5}, rng);
        out.push_back(ck.run("softmax_rows", [&] { return ad::softmax_rows(x); }, {x}));
        Tensor y = random_input({3, 3}, rng);
        std::vector<std::uint8_t> mask{1, 0, 1, 1, 1, 0, 0, 1, 1};
        out.push_back(ck.run("masked_softmax_rows", [&] { return ad::masked_softmax_rows(y, mask); }, {y}));
    }
    {
        Tensor x = random_input({4, 6}, rng), g = random_input({6}, rng), b = random_input({6}, rng);
        out.push_back(ck.run("layer_norm", [&] { return ad::layer_norm(x, g, b); }, {x, g, b}));
        out.push_back(ck.run("gelu", [&] { return ad::gelu(x); }, {x}));
    }
    {
        Tensor x = random_input({2, 5, 5}, rng), k = random_input({3, 2, 3, 3}, rng);
        out.push_back(ck.run("conv2d", [&] { return ad::conv2d(x, k, 2, 1); }, {x, k}));
        Tensor s = random_input({6, 3}, rng), kk = random_input({4, 3, 3}, rng);
        out.push_back(ck.run("causal_conv1d", [&] { return ad::causal_conv1d(s, kk); }, {s, kk}));
    }
    {
        Tensor a = random_input({4, 3}, rng), b = random_input({2, 3}, rng), c = random_input({4, 2}, rng);
        const std::size_t idx[] = {3, 0, 3, 1};
        out.push_back(ck.run("reshape", [&] { return ad::reshape(a, {2, 6}); }, {a}));
        out.push_back(ck.run("slice_rows", [&] { return ad::slice_rows(a, 1, 2); }, {a}));
        out.push_back(ck.run("slice_cols", [&] { return ad::slice_cols(a, 1, 2); }, {a}));
        out.push_back(ck.run("concat_rows", [&] {
            const Tensor p[] = {a, b};
            return ad::concat_rows(p);
        }, {a, b}));
        out.push_back(ck.run("concat_cols", [&] {
            const Tensor p[] = {a, c};
            return ad::concat_cols(p);
        }, {a, c}));
        out.push_back(ck.run("take_rows", [&] { return ad::take_rows(a, idx); }, {a}));
        out.push_back(ck.run("mean_rows", [&] { return ad::mean_rows(a); }, {a}));
        out.push_back(ck.run("sum", [&] { return ad::sum(a); }, {a}));
        out.push_back(ck.run("mean", [&] { return ad::mean(a); }, {a}));
        out.push_back(ck.run("normalize_power", [&] { return ad::normalize_power(a); }, {a}));
        out.push_back(ck.run("complex_scale_pairs", [&] { return ad::complex_scale_pairs(c, 0.3, -1.2); }, {c}));
    }
    {
        Tensor z = random_input({1, 5}, rng), rows = random_input({3, 5}, rng), p = random_input({2, 3}, rng),
               t = random_input({2, 3}, rng, 0.0, 1.0);
        const std::size_t labels[] = {4, 0, 2};
        const int bits[] = {1, 0, 0, 1, 1};
        out.push_back(ck.run("cross_entropy", [&] { return task::cross_entropy_loss(z, 2); }, {z}));
        out.push_back(ck.run("cross_entropy_rows", [&] { return task::cross_entropy_rows(rows, labels); }, {rows}));
        out.push_back(ck.run("binary_cross_entropy", [&] { return task::binary_cross_entropy_multilabel(z, bits); }, {z}));
        out.push_back(ck.run("mse", [&] { return task::mse_loss(p, t); }, {p}));
        Tensor ctc = random_input({5, 4}, rng);
        const std::size_t lab[] = {0, 2, 2};
        out.push_back(ck.run("ctc", [&] { return task::ctc_loss(ctc, lab).loss; }, {ctc}));
    }
    {
        nn::ParamStore store;
        nn::AttentionConfig a;
        a.width = 8;
        a.heads = 2;
        a.ffn_width = 16;
        nn::AttentionLayer layer(store, "attn", a, rng);
        Tensor h = random_input({4, 8}, rng);
        std::vector<Tensor> inputs{h};
        for (const auto& [n, t] : store.items()) inputs.push_back(t);
        out.push_back(ck.run("attention_layer", [&] { return layer.forward(h); }, inputs));
    }

    // Full pipelines: every task preset on one model, noiseless link.
    std::vector<task::TaskSpec> specs;
    for (const auto& p : model::preset_names()) specs.push_back(model::preset_task(p, cfg.input));
    model::Model m(cfg, specs);
    for (std::size_t t = 0; t < specs.size(); ++t) {
        const data::Sample s = sample_for(specs[t].name, cfg.input, seed + t);
        Rng unused(0);
        out.push_back(ck.run("pipeline/" + specs[t].name,
                             [&] { return m.loss(m.forward(s, t, nullptr, unused), s, t); }, m.active_tensors(t), 3));
    }
    return out;
}

}  // namespace semcomm::experiment
