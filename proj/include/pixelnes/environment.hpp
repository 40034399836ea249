#pragma once

// Episodic pixel environments: raw RGB frames from a pluggable backend,
// grayscale + block-average preprocessing, frameskip and the interaction cap.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "compressor.hpp"
#include "error.hpp"

namespace pixelnes {

/// height x width x 3 interleaved RGB bytes.
struct RawFrame {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb;

    RawFrame() = default;
    RawFrame(std::size_t w, std::size_t h) : width(w), height(h), rgb(w * h * 3, 0) {}

    bool empty() const { return width == 0 || height == 0; }

    void set(std::size_t x, std::size_t y, std::uint8_t r, std::uint8_t g, std::uint8_t b)
    {
        const std::size_t i = (y * width + x) * 3;
        rgb[i] = r;
        rgb[i + 1] = g;
        rgb[i + 2] = b;
    }

    void fill_rect(std::size_t x0, std::size_t y0, std::size_t w, std::size_t h, std::uint8_t gray)
    {
        for (std::size_t y = y0; y < y0 + h && y < height; ++y)
            for (std::size_t x = x0; x < x0 + w && x < width; ++x)
                set(x, y, gray, gray, gray);
    }

    bool operator==(const RawFrame&) const = default;
};

namespace detail {

// Cell j of n over a source extent covers [floor(j*src/n), floor((j+1)*src/n)).
inline std::size_t cell_begin(std::size_t j, std::size_t src, std::size_t n) { return j * src / n; }

} // namespace detail

/**
 * Grayscale (mean of the three channels, divided by 255) followed by
 * non-overlapping block averaging down to target_w x target_h.
 *
 * Block edges follow floor(j * src / target); when the target divides the
 * source this is plain fixed-size blocks, otherwise blocks differ by at most
 * one pixel and none is empty.
 */
inline Observation preprocess(const RawFrame& frame, std::size_t target_w, std::size_t target_h)
{
    require(!frame.empty(), "cannot preprocess an empty frame");
    require(frame.rgb.size() == frame.width * frame.height * 3, "frame buffer size does not match dimensions");
    require(target_w >= 1 && target_h >= 1, "target size must be positive");
    require(target_w <= frame.width && target_h <= frame.height, "target size exceeds frame size");

    std::vector<float> out(target_w * target_h);
    for (std::size_t ty = 0; ty < target_h; ++ty) {
        const std::size_t y0 = detail::cell_begin(ty, frame.height, target_h);
        const std::size_t y1 = detail::cell_begin(ty + 1, frame.height, target_h);
        for (std::size_t tx = 0; tx < target_w; ++tx) {
            const std::size_t x0 = detail::cell_begin(tx, frame.width, target_w);
            const std::size_t x1 = detail::cell_begin(tx + 1, frame.width, target_w);
            std::uint64_t sum = 0;
            for (std::size_t y = y0; y < y1; ++y)
                for (std::size_t x = x0; x < x1; ++x) {
                    const std::size_t i = (y * frame.width + x) * 3;
                    sum += frame.rgb[i] + frame.rgb[i + 1] + frame.rgb[i + 2];
                }
            const double count = 3.0 * static_cast<double>((y1 - y0) * (x1 - x0));
            const double v = static_cast<double>(sum) / count / 255.0;
            out[ty * target_w + tx] = std::min(1.0f, static_cast<float>(v));
        }
    }
    return Observation(std::move(out), target_w, target_h);
}

struct RawStep {
    RawFrame frame;
    double reward = 0.0;
    bool terminal = false;
};

/**
 * Backend seam. Anything that can reset to a seeded start, advance one raw
 * frame per action and report its action count can drive training. Action 0
 * must be the no-op used for frameskip padding unless `noop_action` says
 * otherwise.
 */
class FrameSource {
public:
    virtual ~FrameSource() = default;

    virtual std::size_t action_count() const = 0;
    virtual std::size_t frame_width() const = 0;
    virtual std::size_t frame_height() const = 0;
    virtual RawFrame reset(std::uint64_t seed) = 0;
    virtual RawStep raw_step(std::size_t action) = 0;
    virtual std::size_t noop_action() const { return 0; }
    virtual std::string name() const { return "external"; }
};

struct EnvSpec {
    std::size_t action_count = 0;
    std::size_t obs_width = 0;
    std::size_t obs_height = 0;
    std::size_t max_interactions = 200;

    std::size_t obs_len() const { return obs_width * obs_height; }
};

struct StepResult {
    Observation observation;
    double reward = 0.0;
    bool terminal = false;
};

/// Validating wrapper around a FrameSource that speaks in observations.
class Environment {
public:
    Environment(std::unique_ptr<FrameSource> source, std::size_t obs_width, std::size_t obs_height,
                std::size_t max_interactions = 200)
        : source_(std::move(source))
    {
        if (!source_)
            throw EnvironmentError("environment backend is null");
        spec_.action_count = source_->action_count();
        spec_.obs_width = obs_width;
        spec_.obs_height = obs_height;
        spec_.max_interactions = max_interactions;
        if (spec_.action_count < 1)
            throw EnvironmentError("backend reports no actions");
        if (source_->noop_action() >= spec_.action_count)
            throw EnvironmentError("backend no-op action out of range");
        if (source_->frame_width() == 0 || source_->frame_height() == 0)
            throw EnvironmentError("backend reports an empty frame size");
        if (obs_width == 0 || obs_height == 0 || obs_width > source_->frame_width() ||
            obs_height > source_->frame_height())
            throw EnvironmentError("observation size " + std::to_string(obs_width) + "x" +
                                   std::to_string(obs_height) + " incompatible with backend frame size " +
                                   std::to_string(source_->frame_width()) + "x" +
                                   std::to_string(source_->frame_height()));
        require(max_interactions >= 1, "max_interactions must be >= 1");
    }

    const EnvSpec& spec() const { return spec_; }
    FrameSource& source() { return *source_; }

    Observation reset(std::uint64_t seed)
    {
        interactions_ = 0;
        done_ = false;
        RawFrame f = source_->reset(seed);
        check_frame(f);
        return preprocess(f, spec_.obs_width, spec_.obs_height);
    }

    /// Applies `action` once, then the no-op frameskip-1 times, summing rewards.
    StepResult step(std::size_t action, std::size_t frameskip = 5)
    {
        require(action < spec_.action_count, "action out of range");
        require(frameskip >= 1, "frameskip must be >= 1");
        require(!done_, "step called on a finished episode");

        StepResult r;
        RawFrame last;
        for (std::size_t k = 0; k < frameskip; ++k) {
            RawStep s = source_->raw_step(k == 0 ? action : source_->noop_action());
            check_frame(s.frame);
            r.reward += s.reward;
            last = std::move(s.frame);
            if (s.terminal) {
                r.terminal = true;
                break;
            }
        }
        ++interactions_;
        if (interactions_ >= spec_.max_interactions)
            r.terminal = true;
        done_ = r.terminal;
        r.observation = preprocess(last, spec_.obs_width, spec_.obs_height);
        return r;
    }

    std::size_t interactions() const { return interactions_; }

private:
    void check_frame(const RawFrame& f) const
    {
        if (f.width != source_->frame_width() || f.height != source_->frame_height() ||
            f.rgb.size() != f.width * f.height * 3)
            throw EnvironmentError("backend produced a frame of unexpected size");
    }

    std::unique_ptr<FrameSource> source_;
    EnvSpec spec_;
    std::size_t interactions_ = 0;
    bool done_ = false;
};

} // namespace pixelnes
