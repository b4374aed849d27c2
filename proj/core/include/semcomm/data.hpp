#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semcomm/records.hpp"

namespace semcomm::data {

enum class DatasetKind { img_class, text_recon, speech_rec, video_class, mm_xor, mm_multilabel };

std::string_view to_string(DatasetKind k);
DatasetKind parse_kind(std::string_view name);

// Reserved text ids. Words are kFirstWord .. vocab-1.
inline constexpr std::size_t kPad = 0;
inline constexpr std::size_t kUnknown = 1;
inline constexpr std::size_t kMarkerA = 2;  // "alpha" in mm_multilabel
inline constexpr std::size_t kMarkerB = 3;  // "beta" in mm_multilabel
inline constexpr std::size_t kFirstWord = 2;
inline constexpr std::size_t kFirstFiller = 4;

struct Geometry {
    std::size_t channels = 3;
    std::size_t height = 16;
    std::size_t width = 16;
    std::size_t frames = 8;
    std::size_t vocab = 34;  // includes pad and unknown
    std::size_t text_length = 8;
    std::size_t speech_samples = 2048;
    double sample_rate = 8000.0;
    std::size_t max_symbols = 4;

    void validate() const;
};

struct DatasetSpec {
    DatasetKind kind = DatasetKind::img_class;
    std::size_t size = 100;
    std::uint64_t seed = 0;
    Geometry geometry;

    void validate() const;
};

/// Only the fields the kind uses are filled.
struct Sample {
    std::vector<double> image;        // C x H x W
    std::vector<std::size_t> text;    // text_length ids
    std::vector<double> waveform;     // speech_samples
    std::vector<double> video;        // F x C x H x W
    std::size_t label = 0;            // class index
    std::vector<std::size_t> sequence;  // token or symbol sequence
    std::vector<int> labels;            // multi-label 0/1 vector

    bool operator==(const Sample&) const = default;
};

struct Dataset {
    DatasetSpec spec;
    std::vector<Sample> samples;

    std::size_t size() const { return samples.size(); }
};

/// Output classes / labels / symbols of a kind.
std::size_t num_classes(DatasetKind k, const Geometry& g);
/// Tone frequency of speech symbol `s`.
double tone_hz(std::size_t symbol);
inline constexpr std::size_t kSpeechSymbols = 4;
inline constexpr std::size_t kVideoDirections = 4;

Dataset gen_dataset(const DatasetSpec& spec);

/// Deterministic shuffle-split; both sides non-empty.
std::pair<std::vector<Sample>, std::vector<Sample>> split(const std::vector<Sample>& samples, double train_fraction,
                                                          std::uint64_t seed);

/// Consecutive batches; the last one may be shorter.
std::vector<std::vector<Sample>> batch(const std::vector<Sample>& pool, std::size_t batch_size);

std::vector<io::Record> to_records(const Dataset& d);
Dataset from_records(std::span<const io::Record> records);
void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace semcomm::data
