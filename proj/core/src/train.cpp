#include "semcomm/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <map>

#include "semcomm/errors.hpp"
#include "semcomm/log.hpp"
#include "semcomm/metrics.hpp"
#include "semcomm/ops.hpp"
#include "semcomm/records.hpp"

namespace semcomm::train {

namespace {

using task::HeadKind;
using task::MetricKind;

constexpr std::uint64_t kTrainStream = 0x7a11;
constexpr std::uint64_t kShuffleStream = 0x5f1e;

// Running sums from which a task metric is finalized.
struct MetricAccumulator {
    MetricKind kind;
    std::vector<std::size_t> preds, refs;
    std::vector<metric::Sequence> pred_seqs, ref_seqs;
    std::vector<int> pred_bits, ref_bits;
    double psnr_sum = 0.0;
    std::size_t psnr_count = 0;

    void add(const task::TaskSpec& spec, const Tensor& out, const data::Sample& s) {
        switch (spec.head) {
            case HeadKind::class_vec:
                if (kind == MetricKind::f1) {
                    for (std::size_t i = 0; i < out.size(); ++i) pred_bits.push_back(out[i] > 0.0 ? 1 : 0);
                    ref_bits.insert(ref_bits.end(), s.labels.begin(), s.labels.end());
                } else {
                    preds.push_back(task::argmax_row(out));
                    refs.push_back(s.label);
                }
                break;
            case HeadKind::class_seq:
                pred_seqs.push_back(task::ctc_greedy_decode(out));
                ref_seqs.push_back(s.sequence);
                break;
            case HeadKind::recon_seq: {
                metric::Sequence seq;
                for (std::size_t r = 0; r < out.rows(); ++r) seq.push_back(task::argmax_row(out, r));
                if (kind == MetricKind::accuracy) {
                    preds.insert(preds.end(), seq.begin(), seq.end());
                    refs.insert(refs.end(), s.sequence.begin(), s.sequence.end());
                } else {
                    pred_seqs.push_back(std::move(seq));
                    ref_seqs.push_back(s.sequence);
                }
                break;
            }
            case HeadKind::recon_image:
                psnr_sum += metric::capped_psnr(metric::psnr(s.image, out.data(), 1.0));
                ++psnr_count;
                break;
        }
    }

    double value() const {
        switch (kind) {
            case MetricKind::accuracy: return metric::accuracy(preds, refs);
            case MetricKind::f1: return metric::micro_f1(pred_bits, ref_bits);
            case MetricKind::bleu: return metric::mean_bleu(pred_seqs, ref_seqs);
            case MetricKind::word_accuracy: return metric::word_accuracy(pred_seqs, ref_seqs);
            case MetricKind::psnr: return psnr_count ? psnr_sum / static_cast<double>(psnr_count) : 0.0;
        }
        return 0.0;
    }
};

}  // namespace

AdamState make_adam(std::span<const Tensor> params, const AdamConfig& cfg) {
    if (!(cfg.lr > 0.0)) throw ConfigError("learning rate must be positive");
    AdamState s;
    s.cfg = cfg;
    for (const auto& p : params) {
        s.m.emplace_back(p.size(), 0.0);
        s.v.emplace_back(p.size(), 0.0);
    }
    return s;
}

void adam_step(std::span<const Tensor> params, AdamState& s) {
    if (params.size() != s.m.size()) {
        throw ContractError("adam_step: " + std::to_string(params.size()) + " parameters for optimizer state of " +
                            std::to_string(s.m.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].has_grad()) throw ContractError("adam_step: parameter " + std::to_string(i) + " has no gradient");
        if (params[i].size() != s.m[i].size()) throw ContractError("adam_step: parameter shape changed");
    }
    ++s.t;
    const auto& c = s.cfg;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(s.t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(s.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor p = params[i];
        auto w = p.data();
        auto g = params[i].grad();
        auto& m = s.m[i];
        auto& v = s.v[i];
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
            v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
            const double mh = m[k] / bc1, vh = v[k] / bc2;
            w[k] -= c.lr * mh / (std::sqrt(vh) + c.eps);
        }
    }
}

TrainResult train(model::Model& m, std::span<const TrainTask> tasks, const TrainConfig& cfg, const StepHook& hook) {
    if (tasks.empty()) throw ConfigError("train: no tasks");
    if (cfg.batch_size == 0) throw ConfigError("train: batch size must be at least 1");
    if (!(cfg.snr_min_db <= cfg.snr_max_db)) throw ConfigError("train: empty SNR range");
    for (const auto& t : tasks) {
        if (t.samples.empty()) throw ConfigError("train: task '" + m.tasks().at(t.task).name + "' has no data");
        if (!(t.lr > 0.0)) throw ConfigError("train: learning rates must be positive");
    }

    std::vector<std::vector<Tensor>> active;
    TrainResult result;
    for (const auto& t : tasks) {
        active.push_back(m.active_tensors(t.task));
        result.optimizers.push_back(make_adam(active.back(), {t.lr}));
    }

    Rng rng(derive_seed(cfg.seed, {kTrainStream}));
    std::vector<std::deque<std::vector<data::Sample>>> pools(tasks.size());
    auto refill = [&] {
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            std::vector<data::Sample> order = tasks[i].samples;
            Rng shuffle(derive_seed(cfg.seed, {kShuffleStream, result.epochs_started, i}));
            std::shuffle(order.begin(), order.end(), shuffle.engine());
            auto batches = data::batch(order, cfg.batch_size);
            pools[i].assign(std::make_move_iterator(batches.begin()), std::make_move_iterator(batches.end()));
        }
        ++result.epochs_started;
    };

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        std::vector<std::size_t> remaining;
        for (std::size_t i = 0; i < pools.size(); ++i)
            if (!pools[i].empty()) remaining.push_back(i);
        if (remaining.empty()) {
            refill();
            for (std::size_t i = 0; i < pools.size(); ++i) remaining.push_back(i);
        }
        const std::size_t k = remaining[rng.index(remaining.size())];
        const std::vector<data::Sample> batch = std::move(pools[k].front());
        pools[k].pop_front();

        channel::ChannelConfig ch;
        ch.kind = cfg.channel;
        ch.snr_db = cfg.fixed_snr_db ? *cfg.fixed_snr_db : rng.uniform(cfg.snr_min_db, cfg.snr_max_db);

        const std::size_t task_id = tasks[k].task;
        m.params().clear_grad();
        double total = 0.0;
        const double inv = 1.0 / static_cast<double>(batch.size());
        for (const auto& s : batch) {
            Tensor out = m.forward(s, task_id, cfg.noiseless ? nullptr : &ch, rng);
            Tensor l = m.loss(out, s, task_id);
            total += l.item();
            ad::backward(ad::scale(l, inv));
        }
        adam_step(active[k], result.optimizers[k]);

        LossEntry e{step, result.epochs_started - 1, task_id, ch.snr_db, total * inv};
        result.log.push_back(e);
        if (hook) hook(e, result.optimizers);
    }
    m.params().clear_grad();
    return result;
}

double evaluate_metric(const model::Model& m, std::size_t task, std::span<const data::Sample> samples,
                       const channel::ChannelConfig* ch, std::uint64_t seed) {
    ad::NoGradGuard no_grad;
    const auto& spec = m.tasks().at(task);
    MetricAccumulator acc{spec.metric, {}, {}, {}, {}, {}, {}, 0.0, 0};
    Rng rng(seed);
    for (const auto& s : samples) acc.add(spec, m.forward(s, task, ch, rng), s);
    return acc.value();
}

std::uint64_t cell_seed(std::uint64_t seed, std::size_t task, channel::Kind kind, double snr_db) {
    return derive_seed(seed, {task, static_cast<std::uint64_t>(kind), std::bit_cast<std::uint64_t>(snr_db)});
}

std::vector<ResultRow> evaluate(const model::Model& m, std::span<const EvalTask> tasks, std::span<const double> snrs,
                                std::span<const channel::Kind> kinds, std::uint64_t seed) {
    if (snrs.empty()) throw ConfigError("evaluate: empty SNR list");
    std::vector<ResultRow> rows;
    for (const auto& t : tasks) {
        const auto& spec = m.tasks().at(t.task);
        for (auto kind : kinds)
            for (double snr : snrs) {
                channel::ChannelConfig ch{kind, snr, 0, true};
                const std::uint64_t s = cell_seed(seed, t.task, kind, snr);
                ch.seed = s;
                rows.push_back({spec.name, std::string(channel::to_string(kind)), snr,
                                std::string(task::to_string(spec.metric)), evaluate_metric(m, t.task, t.samples, &ch, s),
                                seed});
            }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        if (a.task != b.task) return a.task < b.task;
        if (a.channel != b.channel) return a.channel < b.channel;
        return a.snr_db < b.snr_db;
    });
    return rows;
}

std::vector<std::uint8_t> save_checkpoint(const model::Model& m, std::uint64_t step) {
    std::vector<io::Record> recs;
    for (const auto& [name, t] : m.params().items()) {
        io::Record r{name, {}, {}};
        for (auto e : t.shape()) r.extents.push_back(static_cast<std::uint32_t>(e));
        r.payload.reserve(t.size());
        for (double v : t.data()) r.payload.push_back(static_cast<float>(v));
        recs.push_back(std::move(r));
    }
    recs.push_back(io::u64_record("meta/step", step));
    recs.push_back(io::u64_record("meta/config_digest", m.digest()));
    return io::encode(recs);
}

std::uint64_t load_checkpoint(model::Model& m, std::span<const std::uint8_t> bytes) {
    const auto recs = io::decode(bytes);
    std::map<std::string, const io::Record*> by_name;
    for (const auto& r : recs) by_name[r.name] = &r;

    auto meta = [&](const std::string& name) {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw LoadError("checkpoint lacks " + name);
        return io::u64_from(*it->second);
    };
    const std::uint64_t digest = meta("meta/config_digest");
    const std::uint64_t step = meta("meta/step");
    if (digest != m.digest()) throw VersionError("checkpoint was written for a different model configuration");

    std::size_t matched = 0;
    for (const auto& r : recs) {
        if (r.name.rfind("meta/", 0) == 0) continue;
        if (!m.params().contains(r.name)) throw LoadError("checkpoint has unknown parameter: " + r.name);
        const Tensor t = m.params().get(r.name);
        std::vector<std::size_t> shape(r.extents.begin(), r.extents.end());
        if (shape != t.shape()) {
            throw LoadError("checkpoint parameter " + r.name + " has shape " + ad::shape_str(shape) + ", model expects " +
                            ad::shape_str(t.shape()));
        }
        ++matched;
    }
    if (matched != m.params().size()) throw LoadError("checkpoint is missing parameters");
    for (const auto& [name, t] : m.params().items()) {
        const io::Record& r = *by_name.at(name);
        Tensor dst = t;
        auto d = dst.data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<double>(r.payload[i]);
    }
    return step;
}

}  // namespace semcomm::train
