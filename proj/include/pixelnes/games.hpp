#pragma once

// Built-in deterministic grid games rendered to RGB frames. They stand in for
// an emulator backend at desk scale.

#include <cstdint>
#include <cstdlib>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "environment.hpp"
#include "error.hpp"

namespace pixelnes {

struct GridPos {
    int x = 0;
    int y = 0;
    bool operator==(const GridPos&) const = default;
};

inline int manhattan(GridPos a, GridPos b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

enum GridAction : std::size_t { kNoop = 0, kUp = 1, kDown = 2, kLeft = 3, kRight = 4 };

inline GridPos move(GridPos p, std::size_t action, int width, int height)
{
    switch (action) {
    case kUp:
        p.y = std::max(0, p.y - 1);
        break;
    case kDown:
        p.y = std::min(height - 1, p.y + 1);
        break;
    case kLeft:
        p.x = std::max(0, p.x - 1);
        break;
    case kRight:
        p.x = std::min(width - 1, p.x + 1);
        break;
    default:
        break;
    }
    return p;
}

struct GameConfig {
    std::size_t grid = 8;    ///< cells per side
    std::size_t cell_px = 4; ///< rendered pixels per cell side
};

inline constexpr std::uint8_t kAgentGray = 128;
inline constexpr std::uint8_t kTargetGray = 255;

/**
 * Agent and target on a square grid. Moving closer (Manhattan distance) pays
 * +1, moving away pays -1, and reaching the target ends the episode. Both
 * start cells are drawn from the reset seed.
 */
class DotChaser : public FrameSource {
public:
    explicit DotChaser(GameConfig cfg = {}) : cfg_(cfg)
    {
        require(cfg.grid >= 2 && cfg.cell_px >= 1, "dot_chaser needs grid >= 2 and cell_px >= 1");
    }

    std::size_t action_count() const override { return 5; }
    std::size_t frame_width() const override { return cfg_.grid * cfg_.cell_px; }
    std::size_t frame_height() const override { return cfg_.grid * cfg_.cell_px; }
    std::string name() const override { return "dot_chaser"; }

    RawFrame reset(std::uint64_t seed) override
    {
        std::mt19937_64 rng(seed);
        const int n = static_cast<int>(cfg_.grid);
        std::uniform_int_distribution<int> cell(0, n - 1);
        target_ = {cell(rng), cell(rng)};
        do {
            agent_ = {cell(rng), cell(rng)};
        } while (manhattan(agent_, target_) < 2);
        captured_ = false;
        return render();
    }

    RawStep raw_step(std::size_t action) override
    {
        if (action >= action_count())
            throw EnvironmentError("dot_chaser: action out of range");
        const int n = static_cast<int>(cfg_.grid);
        const int before = manhattan(agent_, target_);
        agent_ = move(agent_, action, n, n);
        const int after = manhattan(agent_, target_);
        RawStep s;
        s.reward = after < before ? 1.0 : (after > before ? -1.0 : 0.0);
        captured_ = after == 0;
        s.terminal = captured_;
        s.frame = render();
        return s;
    }

    GridPos agent() const { return agent_; }
    GridPos target() const { return target_; }

    /// Greedy move toward the target: close the larger axis gap first.
    static std::size_t greedy_action(GridPos agent, GridPos target)
    {
        const int dx = target.x - agent.x;
        const int dy = target.y - agent.y;
        if (dx == 0 && dy == 0)
            return kNoop;
        if (std::abs(dx) >= std::abs(dy))
            return dx > 0 ? kRight : kLeft;
        return dy > 0 ? kDown : kUp;
    }

private:
    RawFrame render() const
    {
        RawFrame f(frame_width(), frame_height());
        const auto px = cfg_.cell_px;
        f.fill_rect(static_cast<std::size_t>(target_.x) * px, static_cast<std::size_t>(target_.y) * px, px, px,
                    kTargetGray);
        if (!captured_)
            f.fill_rect(static_cast<std::size_t>(agent_.x) * px, static_cast<std::size_t>(agent_.y) * px, px, px,
                        kAgentGray);
        return f;
    }

    GameConfig cfg_;
    GridPos agent_;
    GridPos target_;
    bool captured_ = false;
};

/**
 * Obstacles fall from the top row; the agent moves in the bottom three rows.
 * Every surviving raw frame pays +1; touching an obstacle ends the episode.
 * Obstacles advance one row every `fall_period` frames and a new one spawns
 * in a seeded random column every `spawn_period` advances.
 */
class Avoider : public FrameSource {
public:
    explicit Avoider(GameConfig cfg = {}, std::size_t fall_period = 5, std::size_t spawn_period = 2)
        : cfg_(cfg), fall_period_(fall_period), spawn_period_(spawn_period)
    {
        require(cfg.grid >= 4 && cfg.cell_px >= 1, "avoider needs grid >= 4 and cell_px >= 1");
        require(fall_period >= 1 && spawn_period >= 1, "avoider periods must be >= 1");
    }

    std::size_t action_count() const override { return 5; }
    std::size_t frame_width() const override { return cfg_.grid * cfg_.cell_px; }
    std::size_t frame_height() const override { return cfg_.grid * cfg_.cell_px; }
    std::string name() const override { return "avoider"; }

    RawFrame reset(std::uint64_t seed) override
    {
        rng_.seed(seed);
        const int n = static_cast<int>(cfg_.grid);
        agent_ = {n / 2, n - 1};
        obstacles_.clear();
        frame_ = 0;
        advances_ = 0;
        return render();
    }

    RawStep raw_step(std::size_t action) override
    {
        if (action >= action_count())
            throw EnvironmentError("avoider: action out of range");
        const int n = static_cast<int>(cfg_.grid);
        GridPos next = move(agent_, action, n, n);
        next.y = std::max(next.y, n - 3);
        agent_ = next;

        RawStep s;
        bool hit = collides();
        if (!hit && ++frame_ % fall_period_ == 0) {
            for (auto& o : obstacles_)
                ++o.y;
            std::erase_if(obstacles_, [n](const GridPos& o) { return o.y >= n; });
            if (advances_++ % spawn_period_ == 0) {
                std::uniform_int_distribution<int> col(0, n - 1);
                obstacles_.push_back({col(rng_), 0});
            }
            hit = collides();
        }
        s.terminal = hit;
        s.reward = hit ? 0.0 : 1.0;
        s.frame = render();
        return s;
    }

    GridPos agent() const { return agent_; }
    const std::vector<GridPos>& obstacles() const { return obstacles_; }

private:
    bool collides() const
    {
        for (const auto& o : obstacles_)
            if (o == agent_)
                return true;
        return false;
    }

    RawFrame render() const
    {
        RawFrame f(frame_width(), frame_height());
        const auto px = cfg_.cell_px;
        for (const auto& o : obstacles_)
            f.fill_rect(static_cast<std::size_t>(o.x) * px, static_cast<std::size_t>(o.y) * px, px, px, kTargetGray);
        f.fill_rect(static_cast<std::size_t>(agent_.x) * px, static_cast<std::size_t>(agent_.y) * px, px, px,
                    kAgentGray);
        return f;
    }

    GameConfig cfg_;
    std::size_t fall_period_;
    std::size_t spawn_period_;
    std::mt19937_64 rng_;
    GridPos agent_;
    std::vector<GridPos> obstacles_;
    std::size_t frame_ = 0;
    std::size_t advances_ = 0;
};

inline std::unique_ptr<FrameSource> make_game(const std::string& name, GameConfig cfg)
{
    if (name == "dot_chaser")
        return std::make_unique<DotChaser>(cfg);
    if (name == "avoider")
        return std::make_unique<Avoider>(cfg);
    throw ContractViolation("unknown environment '" + name + "'");
}

} // namespace pixelnes
