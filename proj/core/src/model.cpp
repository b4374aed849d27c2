#include "semcomm/model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "semcomm/errors.hpp"
#include "semcomm/ops.hpp"

namespace semcomm::model {

namespace {

using task::HeadKind;
using task::LossKind;
using task::MetricKind;
using task::TaskSpec;

enum Component : std::uint64_t { kImage = 1, kText, kSpeech, kVideo, kFusion, kTaskTable, kChannel, kHead };

bool has(const TaskSpec& t, Modality m) {
    return std::find(t.modalities.begin(), t.modalities.end(), m) != t.modalities.end();
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::string_view encoder_prefix(Modality m) {
    switch (m) {
        case Modality::image: return "image_encoder";
        case Modality::text: return "text_encoder";
        case Modality::speech: return "speech_encoder";
        case Modality::video: return "video_encoder";
    }
    return "?";
}

enc::EncoderConfig ModelConfig::encoder() const {
    return {width, encoder_layers, encoder_heads, head_scale};
}

fusion::FusionConfig ModelConfig::fusion() const {
    fusion::FusionConfig f;
    f.width = width;
    f.layers = fusion_layers;
    f.heads = fusion_heads;
    f.head_scale = head_scale;
    return f;
}

enc::ImageGeometry ModelConfig::image() const {
    return {input.channels, input.height, input.width, stem_stride, block_stride};
}

enc::TextGeometry ModelConfig::text() const { return {input.vocab, input.text_length, text_segments}; }

enc::SpeechGeometry ModelConfig::speech() const {
    enc::SpeechGeometry g;
    g.fbank.sample_rate = input.sample_rate;
    g.fbank.frame = frame;
    g.fbank.hop = hop;
    g.fbank.filters = mel_filters;
    g.samples = input.speech_samples;
    g.conv_channels = conv_channels;
    g.kernel = conv_kernel;
    return g;
}

enc::VideoEmbeddingConfig ModelConfig::video() const {
    enc::VideoEmbeddingConfig v;
    v.frames = input.frames;
    v.channels = input.channels;
    v.height = input.height;
    v.width = input.width;
    v.tube_frames = tube_frames;
    v.tube_height = tube_height;
    v.tube_width = tube_width;
    v.swap_masks = swap_masks;
    return v;
}

std::size_t ModelConfig::modality_length(Modality m) const {
    switch (m) {
        case Modality::image: return image().tokens();
        case Modality::text: return input.text_length;
        case Modality::speech: return speech().tokens();
        case Modality::video: return video().tokens();
    }
    return 0;
}

void ModelConfig::validate() const {
    if (width < 4) throw ConfigError("model width must be at least 4");
    if (encoder_heads == 0 || width % encoder_heads != 0) {
        throw ConfigError("model width " + std::to_string(width) + " is not divisible by " +
                          std::to_string(encoder_heads) + " encoder heads");
    }
    if (symbols() == 0 || symbols() >= width) {
        throw ConfigError("compressed width " + std::to_string(symbols()) + " must be in [1, " + std::to_string(width) +
                          ")");
    }
    input.validate();
    image().validate();
    text().validate();
    speech().validate();
    video().validate();
    fusion().validate();
}

std::string ModelConfig::canonical() const {
    std::ostringstream s;
    s << "P=" << width << ";d=" << symbols() << ";enc=" << encoder_layers << "x" << encoder_heads
      << ";fusion=" << fusion_layers << "x" << fusion().effective_heads() << ";head_scale=" << head_scale
      << ";head_hidden=" << head_hidden << ";img=" << input.channels << "x" << input.height << "x" << input.width
      << "/" << stem_stride << "/" << block_stride << ";text=" << input.vocab << "x" << input.text_length << "x"
      << text_segments << ";speech=" << input.speech_samples << "@" << input.sample_rate << "/" << frame << "/"
      << hop << "/" << mel_filters << "/" << conv_channels << "/" << conv_kernel << ";video=" << input.frames << "/"
      << tube_frames << "x" << tube_height << "x" << tube_width << "/" << swap_masks;
    return s.str();
}

std::vector<std::string> preset_names() {
    return {"img_class", "img_recon", "text_recon", "speech_rec", "video_class", "mm_xor", "mm_multilabel"};
}

data::DatasetKind preset_dataset(std::string_view preset) {
    if (preset == "img_recon") return data::DatasetKind::img_class;
    return data::parse_kind(preset);
}

TaskSpec preset_task(std::string_view preset, const data::Geometry& g) {
    TaskSpec t;
    t.name = std::string(preset);
    if (preset == "img_recon") {
        t.modalities = {Modality::image};
        t.head = HeadKind::recon_image;
        t.loss = LossKind::mse;
        t.metric = MetricKind::psnr;
        t.outputs = g.channels * g.height * g.width;
        return t;
    }
    const auto kind = data::parse_kind(preset);
    const std::size_t n = data::num_classes(kind, g);
    switch (kind) {
        case data::DatasetKind::img_class:
            t.modalities = {Modality::image};
            break;
        case data::DatasetKind::text_recon:
            t.modalities = {Modality::text};
            t.head = HeadKind::recon_seq;
            t.metric = MetricKind::bleu;
            break;
        case data::DatasetKind::speech_rec:
            t.modalities = {Modality::speech};
            t.head = HeadKind::class_seq;
            t.loss = LossKind::ctc;
            t.metric = MetricKind::word_accuracy;
            t.outputs = n + 1;
            return t;
        case data::DatasetKind::video_class:
            t.modalities = {Modality::video};
            break;
        case data::DatasetKind::mm_xor:
            t.modalities = {Modality::image, Modality::text};
            break;
        case data::DatasetKind::mm_multilabel:
            t.modalities = {Modality::image, Modality::text};
            t.loss = LossKind::binary_cross_entropy;
            t.metric = MetricKind::f1;
            break;
    }
    t.outputs = n;
    return t;
}

double default_learning_rate(const TaskSpec& spec) { return has(spec, Modality::speech) ? 2e-4 : 1e-4; }

Model::Model(const ModelConfig& cfg, std::vector<TaskSpec> tasks) : cfg_(cfg), tasks_(std::move(tasks)) {
    cfg_.validate();
    if (tasks_.empty()) throw ConfigError("model needs at least one task");
    std::set<std::string> names;
    bool any_multimodal = false;
    std::set<Modality> used;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        TaskSpec& t = tasks_[i];
        t.id = i;
        t.validate();
        if (!names.insert(t.name).second) throw ConfigError("duplicate task name: " + t.name);
        if (t.multimodal()) {
            any_multimodal = true;
            if (t.head != HeadKind::class_vec) {
                throw ConfigError("task '" + t.name + "': a fused task transmits one row and needs a class_vec head");
            }
        }
        if (t.head == HeadKind::recon_image) {
            if (t.modalities != std::vector<Modality>{Modality::image} ||
                t.outputs != cfg_.input.channels * cfg_.input.height * cfg_.input.width) {
                throw ConfigError("task '" + t.name + "': image reconstruction needs the image modality and C*H*W outputs");
            }
        }
        if (t.head == HeadKind::recon_seq && (t.modalities != std::vector<Modality>{Modality::text} ||
                                              t.outputs != cfg_.input.vocab)) {
            throw ConfigError("task '" + t.name + "': sequence reconstruction needs the text modality and vocab outputs");
        }
        used.insert(t.modalities.begin(), t.modalities.end());
    }

    const std::uint64_t seed = cfg_.seed;
    const auto enc_cfg = cfg_.encoder();
    if (used.count(Modality::image)) {
        Rng rng(derive_seed(seed, {kImage}));
        image_.emplace(store_, "image_encoder", cfg_.image(), cfg_.width, rng);
    }
    if (used.count(Modality::text)) {
        Rng rng(derive_seed(seed, {kText}));
        text_.emplace(store_, "text_encoder", cfg_.text(), enc_cfg, rng);
    }
    if (used.count(Modality::speech)) {
        Rng rng(derive_seed(seed, {kSpeech}));
        speech_.emplace(store_, "speech_encoder", cfg_.speech(), enc_cfg, rng);
    }
    if (used.count(Modality::video)) {
        Rng rng(derive_seed(seed, {kVideo}));
        video_.emplace(store_, "video_encoder", cfg_.video(), enc_cfg, rng);
    }
    if (any_multimodal) {
        Rng rng(derive_seed(seed, {kFusion}));
        fusion_.emplace(store_, "fusion", cfg_.fusion(), rng);
    }
    {
        Rng rng(derive_seed(seed, {kTaskTable}));
        task_table_ = enc::TaskEmbeddingTable(store_, "task_table", tasks_.size(), cfg_.width, rng);
    }
    {
        Rng rng(derive_seed(seed, {kChannel}));
        channel_encoder_ = channel::ChannelEncoder(store_, "channel_encoder", cfg_.width, cfg_.symbols(), rng);
        channel_decoder_ = channel::ChannelDecoder(store_, "channel_decoder", cfg_.width, cfg_.symbols(), rng);
    }
    for (const auto& t : tasks_) {
        TaskSpec spec = t;
        spec.hidden = spec.hidden ? spec.hidden : cfg_.head_hidden;
        Rng rng(derive_seed(seed, {kHead, fnv1a(t.name)}));
        heads_.emplace_back(store_, "head." + t.name, spec, cfg_.width, rng);
    }
}

std::size_t Model::task_index(std::string_view name) const {
    for (const auto& t : tasks_)
        if (t.name == name) return t.id;
    throw LookupError("unknown task: " + std::string(name));
}

std::vector<SemanticFeatures> Model::encode(const data::Sample& s, std::size_t task) const {
    const TaskSpec& spec = tasks_.at(task);
    const auto& g = cfg_.input;
    std::vector<SemanticFeatures> out;
    for (Modality m : spec.modalities) {
        SemanticFeatures f;
        switch (m) {
            case Modality::image:
                f = image_->encode(Tensor({g.channels, g.height, g.width}, s.image, false));
                break;
            case Modality::text:
                f = text_->encode(s.text);
                break;
            case Modality::speech:
                f = speech_->encode_waveform(s.waveform);
                break;
            case Modality::video:
                f = video_->encode(Tensor({g.frames, g.channels, g.height, g.width}, s.video, false));
                break;
        }
        f.task_id = task;
        out.push_back(std::move(f));
    }
    return out;
}

Tensor Model::semantic_rows(const data::Sample& s, std::size_t task) const {
    const auto features = encode(s, task);
    if (tasks_.at(task).multimodal()) return fusion_->fuse(features, task_table_, task).vector;
    return task_table_.append(features[0], task).matrix;
}

Tensor Model::transmit(const Tensor& rows, const channel::ChannelConfig* ch, Rng& rng) const {
    channel::SymbolBlock block = channel_encoder_.encode(rows);
    const Tensor received = ch ? channel::apply_channel(block, *ch, rng) : block.symbols;
    return channel_decoder_.decode(received);
}

Tensor Model::forward(const data::Sample& s, std::size_t task, const channel::ChannelConfig* ch, Rng& rng) const {
    const TaskSpec& spec = tasks_.at(task);
    Tensor decoded = transmit(semantic_rows(s, task), ch, rng);
    // Sequence heads read one row per source position; the task row is dropped.
    if (spec.head == HeadKind::class_seq || spec.head == HeadKind::recon_seq)
        decoded = ad::slice_rows(decoded, 0, decoded.rows() - 1);
    return heads_[task].forward(decoded);
}

Tensor Model::loss(const Tensor& output, const data::Sample& s, std::size_t task) const {
    const TaskSpec& spec = tasks_.at(task);
    switch (spec.loss) {
        case LossKind::cross_entropy:
            if (spec.head == HeadKind::recon_seq) return task::cross_entropy_rows(output, s.sequence);
            return task::cross_entropy_loss(output, s.label);
        case LossKind::binary_cross_entropy:
            return task::binary_cross_entropy_multilabel(output, s.labels);
        case LossKind::ctc: {
            auto r = task::ctc_loss(output, s.sequence);
            if (r.infeasible) {
                throw ContractError("CTC label of length " + std::to_string(s.sequence.size()) +
                                    " cannot be emitted in " + std::to_string(output.rows()) + " frames");
            }
            return r.loss;
        }
        case LossKind::mse:
            return task::mse_loss(output, Tensor({1, s.image.size()}, s.image, false));
    }
    throw ContractError("unhandled loss kind");
}

std::size_t Model::transmitted_rows(std::size_t task) const {
    const TaskSpec& spec = tasks_.at(task);
    return spec.multimodal() ? 1 : unfused_rows(task);
}

std::size_t Model::unfused_rows(std::size_t task) const {
    std::size_t l = 1;
    for (Modality m : tasks_.at(task).modalities) l += cfg_.modality_length(m);
    return l;
}

std::vector<std::string> Model::active_parameters(std::size_t task) const {
    const TaskSpec& spec = tasks_.at(task);
    std::vector<std::string> prefixes;
    for (Modality m : spec.modalities) prefixes.emplace_back(std::string(encoder_prefix(m)) + ".");
    if (spec.multimodal()) prefixes.emplace_back("fusion.");
    prefixes.emplace_back("channel_encoder.");
    prefixes.emplace_back("channel_decoder.");
    prefixes.emplace_back("head." + spec.name + ".");
    std::vector<std::string> out;
    for (const auto& [name, t] : store_.items()) {
        bool hit = name == "task_table";
        for (const auto& p : prefixes) hit = hit || name.rfind(p, 0) == 0;
        if (hit) out.push_back(name);
    }
    return out;
}

std::vector<Tensor> Model::active_tensors(std::size_t task) const {
    std::vector<Tensor> out;
    for (const auto& n : active_parameters(task)) out.push_back(store_.get(n));
    return out;
}

std::uint64_t Model::digest() const {
    std::ostringstream s;
    s << cfg_.canonical();
    for (const auto& t : tasks_) {
        s << "|task=" << t.name << ":" << to_string(t.head) << ":" << to_string(t.loss) << ":" << to_string(t.metric)
          << ":" << t.outputs;
        for (Modality m : t.modalities) s << ":" << to_string(m);
    }
    for (const auto& [name, t] : store_.items()) s << "|" << name << ad::shape_str(t.shape());
    return fnv1a(s.str());
}

}  // namespace semcomm::model
