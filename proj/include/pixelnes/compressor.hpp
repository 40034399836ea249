#pragma once

/**
 * @file compressor.hpp
 * @brief Online-growing vector quantization dictionary (IDVQ) and the binary
 * direct-residuals sparse encoder (DRSC) that reads it.
 *
 * The dictionary starts empty. Each training image is encoded against the
 * current dictionary, the clipped positive part of its reconstruction error is
 * computed, and if that residual carries more than `delta` total intensity it
 * is appended as a new centroid. Centroids are never refined afterwards.
 *
 * Encoding is greedy and single-pass: repeatedly pick the unused centroid with
 * the smallest aggregated absolute difference to the remaining residual, mark
 * its bit, subtract it and clip negatives (reconstruction artifacts) to zero.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "binary_io.hpp"
#include "error.hpp"

namespace pixelnes {

/// Grayscale image with intensities in [0, 1], row-major.
struct Observation {
    std::vector<float> pixels;
    std::size_t width = 0;
    std::size_t height = 0;

    Observation() = default;

    Observation(std::vector<float> values, std::size_t w, std::size_t h)
        : pixels(std::move(values)), width(w), height(h)
    {
        require(w > 0 && h > 0, "observation dimensions must be positive");
        require(pixels.size() == w * h, "observation pixel count does not match width*height");
        for (float p : pixels)
            require(p >= 0.0f && p <= 1.0f, "observation pixel outside [0,1]");
    }

    std::size_t size() const { return pixels.size(); }
    std::span<const float> view() const { return pixels; }
};

/// Binary code with one bit per dictionary centroid.
struct SparseCode {
    std::vector<std::uint8_t> bits;

    std::size_t size() const { return bits.size(); }

    std::size_t popcount() const
    {
        return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
    }

    std::string to_string() const
    {
        std::string s;
        s.reserve(bits.size());
        for (auto b : bits)
            s.push_back(b ? '1' : '0');
        return s;
    }

    bool operator==(const SparseCode&) const = default;
};

enum class TrainingSelection {
    uniform,  ///< reservoir sample of everything offered
    residual, ///< keep the samples with the largest post-encoding residual
};

struct CompressorConfig {
    double delta = 0.005;  ///< minimal aggregated residual for a new centroid
    double epsilon = 1.0;  ///< encoding stops once the residual sum is at most this
    std::size_t omega = 10; ///< maximum number of ones in a code
    std::size_t train_set_capacity = 20;
    TrainingSelection selection = TrainingSelection::uniform;

    void validate() const
    {
        require(std::isfinite(delta) && delta >= 0.0, "delta must be >= 0");
        require(std::isfinite(epsilon) && epsilon >= 0.0, "epsilon must be >= 0");
        require(omega >= 1, "omega must be >= 1");
        require(train_set_capacity >= 1, "train_set_capacity must be >= 1");
    }
};

/// Append-only ordered collection of non-negative centroids, stored contiguously.
class Dictionary {
public:
    Dictionary() = default;
    explicit Dictionary(std::size_t image_len) : image_len_(image_len)
    {
        require(image_len > 0, "dictionary image length must be positive");
    }

    std::size_t image_len() const { return image_len_; }
    std::size_t size() const { return image_len_ == 0 ? 0 : data_.size() / image_len_; }
    bool empty() const { return data_.empty(); }

    std::span<const float> centroid(std::size_t i) const
    {
        require(i < size(), "centroid index out of range");
        return {data_.data() + i * image_len_, image_len_};
    }

    std::span<const float> raw() const { return data_; }

    void append(std::span<const float> values)
    {
        require(image_len_ > 0, "dictionary has no image length");
        require(values.size() == image_len_, "centroid length does not match dictionary");
        for (float v : values)
            require(v >= 0.0f && std::isfinite(v), "centroid values must be finite and non-negative");
        data_.insert(data_.end(), values.begin(), values.end());
    }

    bool operator==(const Dictionary&) const = default;

private:
    std::size_t image_len_ = 0;
    std::vector<float> data_;
};

struct EncodeResult {
    SparseCode code;
    double residual = 0.0; ///< sum of the clipped residual left after encoding
};

namespace detail {

inline double l1_distance(std::span<const float> a, std::span<const float> b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
    return acc;
}

inline double l1_norm(std::span<const float> a)
{
    double acc = 0.0;
    for (float v : a)
        acc += std::abs(static_cast<double>(v));
    return acc;
}

} // namespace detail

/// DRSC encoding that also reports the leftover residual magnitude.
inline EncodeResult drsc_encode_with_residual(std::span<const float> x, const Dictionary& dict,
                                              const CompressorConfig& cfg)
{
    const std::size_t n = dict.size();
    require(dict.image_len() == 0 || x.size() == dict.image_len(), "image length does not match dictionary");

    EncodeResult out;
    out.code.bits.assign(n, 0);

    std::vector<float> residual(x.begin(), x.end());
    double residual_sum = detail::l1_norm(residual);
    std::size_t ones = 0;

    while (residual_sum > cfg.epsilon && ones < cfg.omega && ones < n) {
        std::size_t best = n;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (out.code.bits[i])
                continue;
            const double dist = detail::l1_distance(residual, dict.centroid(i));
            if (dist < best_dist) { // strict: ties go to the lowest index
                best_dist = dist;
                best = i;
            }
        }
        if (best == n) // only NaN distances remain
            break;

        out.code.bits[best] = 1;
        ++ones;
        const auto c = dict.centroid(best);
        for (std::size_t j = 0; j < residual.size(); ++j)
            residual[j] = std::max(0.0f, residual[j] - c[j]);
        residual_sum = detail::l1_norm(residual);
    }

    out.residual = residual_sum;
    return out;
}

inline SparseCode drsc_encode(std::span<const float> x, const Dictionary& dict, const CompressorConfig& cfg)
{
    return drsc_encode_with_residual(x, dict, cfg).code;
}

inline SparseCode drsc_encode(const Observation& x, const Dictionary& dict, const CompressorConfig& cfg)
{
    return drsc_encode(x.view(), dict, cfg);
}

/// Unweighted sum of the centroids selected by a binary code.
inline std::vector<float> reconstruct(const SparseCode& code, const Dictionary& dict)
{
    require(code.size() == dict.size(), "code length does not match dictionary size");
    std::vector<float> out(dict.image_len(), 0.0f);
    for (std::size_t i = 0; i < code.size(); ++i) {
        if (!code.bits[i])
            continue;
        const auto c = dict.centroid(i);
        for (std::size_t j = 0; j < out.size(); ++j)
            out[j] += c[j];
    }
    return out;
}

/// max(0, x - recon): information in x that the reconstruction misses.
inline std::vector<float> clipped_residual(std::span<const float> x, std::span<const float> recon)
{
    require(x.size() == recon.size(), "residual operands differ in length");
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = std::max(0.0f, x[i] - recon[i]);
    return out;
}

struct TrainStepResult {
    bool grew = false;
    double residual = 0.0; ///< aggregated clipped reconstruction residual of the sample
};

/// One IDVQ step: append the clipped reconstruction residual of x if it exceeds delta.
inline TrainStepResult idvq_train_step(std::span<const float> x, Dictionary& dict, const CompressorConfig& cfg)
{
    if (dict.image_len() == 0)
        dict = Dictionary(x.size());
    require(x.size() == dict.image_len(), "image length does not match dictionary");

    const SparseCode code = drsc_encode(x, dict, cfg);
    const std::vector<float> recon = reconstruct(code, dict);
    std::vector<float> res = clipped_residual(x, recon);

    TrainStepResult out;
    out.residual = detail::l1_norm(res);
    if (out.residual > cfg.delta) {
        dict.append(res);
        out.grew = true;
    }
    return out;
}

inline TrainStepResult idvq_train_step(const Observation& x, Dictionary& dict, const CompressorConfig& cfg)
{
    return idvq_train_step(x.view(), dict, cfg);
}

/// Offered observation plus the bookkeeping needed for order-independent sampling.
struct TrainingSample {
    Observation observation;
    double priority = 0.0;   ///< lower is kept first
    std::uint64_t stamp = 0; ///< global offer order; ties and final ordering
    double residual = 0.0;   ///< post-encoding residual at the time of the offer
};

/**
 * Bounded training set built by bottom-k reservoir sampling.
 *
 * Every offer carries a priority; the set keeps the `capacity` offers with the
 * smallest priorities. With i.i.d. uniform priorities this is a uniform sample
 * without replacement of everything offered, and because the outcome depends
 * only on the (priority, stamp) pairs, sets filled by parallel evaluators can
 * be merged without changing the result.
 */
class TrainingSet {
public:
    explicit TrainingSet(std::size_t capacity = 1) : capacity_(capacity)
    {
        require(capacity >= 1, "training set capacity must be >= 1");
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return heap_.size(); }
    std::uint64_t seen_count() const { return seen_; }

    void offer(TrainingSample sample)
    {
        ++seen_;
        push(std::move(sample));
    }

    /// Sequential uniform offer; the stamp is the running offer count.
    template <typename Rng>
    void offer(Observation x, Rng& rng)
    {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        offer(TrainingSample{std::move(x), u, seen_, 0.0});
    }

    void merge(const TrainingSet& other)
    {
        seen_ += other.seen_;
        for (const auto& s : other.heap_)
            push(s);
    }

    /// Retained samples in offer order.
    std::vector<TrainingSample> samples() const
    {
        std::vector<TrainingSample> out = heap_;
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.stamp < b.stamp; });
        return out;
    }

    void clear()
    {
        heap_.clear();
        seen_ = 0;
    }

private:
    static bool worse(const TrainingSample& a, const TrainingSample& b)
    {
        if (a.priority != b.priority)
            return a.priority < b.priority;
        return a.stamp < b.stamp;
    }

    void push(TrainingSample sample)
    {
        if (heap_.size() < capacity_) {
            heap_.push_back(std::move(sample));
            std::push_heap(heap_.begin(), heap_.end(), worse);
            return;
        }
        if (!worse(sample, heap_.front()))
            return;
        std::pop_heap(heap_.begin(), heap_.end(), worse);
        heap_.back() = std::move(sample);
        std::push_heap(heap_.begin(), heap_.end(), worse);
    }

    std::size_t capacity_;
    std::uint64_t seen_ = 0;
    std::vector<TrainingSample> heap_; // max-heap on (priority, stamp)
};

struct TrainReport {
    std::size_t added = 0;
    std::vector<double> residuals; ///< per sample, in training order
};

/// Folds idvq_train_step over the retained samples in offer order.
inline TrainReport idvq_train(const TrainingSet& ts, Dictionary& dict, const CompressorConfig& cfg)
{
    TrainReport report;
    for (const auto& s : ts.samples()) {
        const auto step = idvq_train_step(s.observation, dict, cfg);
        report.residuals.push_back(step.residual);
        if (step.grew)
            ++report.added;
    }
    return report;
}

// Dictionary file layout (all little-endian):
//   8 bytes  magic "IDVQDICT"
//   u32      format version (1)
//   u32      image_len
//   u32      centroid count
//   f32[count * image_len]  centroid values, row-major (one centroid per row)
inline constexpr std::string_view kDictionaryMagic = "IDVQDICT";
inline constexpr std::uint32_t kDictionaryVersion = 1;

inline void write_dictionary(std::ostream& out, const Dictionary& dict)
{
    io::write_magic(out, kDictionaryMagic);
    io::write_u32(out, kDictionaryVersion);
    io::write_u32(out, static_cast<std::uint32_t>(dict.image_len()));
    io::write_u32(out, static_cast<std::uint32_t>(dict.size()));
    for (float v : dict.raw())
        io::write_f32(out, v);
}

inline Dictionary read_dictionary(std::istream& in)
{
    io::expect_magic(in, kDictionaryMagic);
    const auto version = io::read_u32(in);
    if (version != kDictionaryVersion)
        throw FormatError("unsupported dictionary version " + std::to_string(version));
    const auto image_len = io::read_u32(in);
    const auto count = io::read_u32(in);
    if (image_len == 0) {
        if (count != 0)
            throw FormatError("dictionary with zero image length has centroids");
        return Dictionary{};
    }
    Dictionary dict(image_len);
    std::vector<float> row(image_len);
    for (std::uint32_t c = 0; c < count; ++c) {
        for (auto& v : row)
            v = io::read_f32(in);
        try {
            dict.append(row);
        } catch (const ContractViolation& e) {
            throw FormatError(std::string("invalid centroid in dictionary file: ") + e.what());
        }
    }
    return dict;
}

} // namespace pixelnes
