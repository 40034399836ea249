#pragma once

/**
 * @file harness.hpp
 * @brief The generational training loop tying environment, compressor,
 * controller and optimizer together, plus checkpoints and metrics.
 *
 * One generation:
 *   1. ask the optimizer for lambda genomes;
 *   2. evaluate each genome episodically, encoding every observation against
 *      the frozen dictionary and offering it to the compressor training set;
 *   3. tell the optimizer the fitnesses;
 *   4. train the dictionary on the collected set;
 *   5. if the dictionary grew, widen the controller inputs and insert the
 *      matching dimensions into the search distribution.
 * The state is only replaced once every step succeeded, so a failed generation
 * leaves the previous state untouched.
 */

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "binary_io.hpp"
#include "compressor.hpp"
#include "config.hpp"
#include "controller.hpp"
#include "environment.hpp"
#include "games.hpp"
#include "image_io.hpp"
#include "xnes.hpp"

namespace pixelnes {

struct GenerationRecord {
    std::size_t gen = 0;
    double best = 0.0;
    double mean = 0.0;
    double min = 0.0;
    std::size_t dict_size = 0;
    std::size_t params = 0;
    std::size_t lambda = 0;
    double seconds = 0.0;
    // Compressor training diagnostics, written to a separate file.
    std::size_t train_samples = 0;
    std::uint64_t observations_seen = 0;
    double train_residual_mean = 0.0;
    double train_residual_max = 0.0;
};

inline constexpr std::string_view kMetricsHeader = "gen,best,mean,min,dict_size,params,lambda,seconds";

inline std::string format_metrics_row(const GenerationRecord& r)
{
    std::ostringstream out;
    out << std::setprecision(10) << r.gen << ',' << r.best << ',' << r.mean << ',' << r.min << ',' << r.dict_size << ','
        << r.params << ',' << r.lambda << ',' << r.seconds;
    return out.str();
}

inline std::string format_training_row(const GenerationRecord& r)
{
    std::ostringstream out;
    out << std::setprecision(10) << r.gen << ',' << r.train_samples << ',' << r.observations_seen << ','
        << r.train_residual_mean << ',' << r.train_residual_max;
    return out.str();
}

inline std::unique_ptr<FrameSource> make_source(const RunConfig& cfg)
{
    return make_game(cfg.env, GameConfig{cfg.grid, cfg.cell_px});
}

inline Environment make_environment(const RunConfig& cfg)
{
    return Environment(make_source(cfg), cfg.obs_width, cfg.obs_height, cfg.max_interactions);
}

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Receives every observation seen during an evaluation.
struct ObservationSink {
    TrainingSet* set = nullptr;
    TrainingSelection selection = TrainingSelection::uniform;
    std::uint64_t key_seed = 0;
    std::uint64_t stamp_base = 0;

    void offer(const Observation& obs, double residual, std::uint64_t local_index) const
    {
        if (!set)
            return;
        const std::uint64_t stamp = stamp_base + local_index;
        double priority;
        if (selection == TrainingSelection::residual)
            priority = -residual;
        else
            priority = static_cast<double>(splitmix64(key_seed ^ splitmix64(stamp)) >> 11) * 0x1.0p-53;
        set->offer(TrainingSample{obs, priority, stamp, residual});
    }
};

inline std::uint64_t episode_seed(const RunConfig& cfg, std::size_t episode)
{
    return cfg.env_seed + static_cast<std::uint64_t>(episode) * cfg.episode_seed_stride;
}

using FrameHook = std::function<void(const Observation&, std::size_t step)>;

/// Runs one episode with a fresh controller state; returns the cumulative reward.
inline double run_episode(Controller& controller, Environment& env, const Dictionary& dict, const RunConfig& cfg,
                          std::uint64_t seed, const ObservationSink* sink = nullptr,
                          std::uint64_t sink_offset = 0, const FrameHook& hook = {})
{
    controller.reset();
    Observation obs = env.reset(seed);
    double total = 0.0;
    for (std::size_t t = 0;; ++t) {
        if (hook)
            hook(obs, t);
        const EncodeResult enc = drsc_encode_with_residual(obs.view(), dict, cfg.compressor);
        if (sink)
            sink->offer(obs, enc.residual, sink_offset + t);
        const std::size_t action = controller.act(enc.code);
        StepResult r = env.step(action, cfg.frameskip);
        total += r.reward;
        obs = std::move(r.observation);
        if (r.terminal)
            break;
    }
    return total;
}

/// Mean cumulative reward of a genome over evals_per_individual episodes.
inline double evaluate_individual(std::span<const double> genome, Environment& env, const Dictionary& dict,
                                  const ControllerShape& shape, const RunConfig& cfg,
                                  const ObservationSink* sink = nullptr)
{
    require(genome.size() == shape.weight_count(), "genome length does not match controller shape");
    require(shape.n_neurons == env.spec().action_count, "controller neurons must equal the action count");
    Controller controller(std::vector<double>(genome.begin(), genome.end()), shape, cfg.activation);
    const std::uint64_t per_episode = cfg.max_interactions + 1;
    double sum = 0.0;
    for (std::size_t e = 0; e < cfg.evals_per_individual; ++e)
        sum += run_episode(controller, env, dict, cfg, episode_seed(cfg, e), sink, e * per_episode);
    return sum / static_cast<double>(cfg.evals_per_individual);
}

/// Everything needed to continue a run.
struct RunState {
    std::size_t generation = 0;
    Dictionary dict;
    ControllerShape shape;
    SearchDistribution dist;
    NesHyper hyper;
    std::mt19937_64 rng;

    bool consistent() const
    {
        return shape.n_inputs == dict.size() && dist.dim() == shape.weight_count();
    }
};

inline RunState initial_state(const RunConfig& cfg)
{
    cfg.validate();
    Environment env = make_environment(cfg);
    RunState s;
    s.dict = Dictionary(env.spec().obs_len());
    s.shape = ControllerShape{0, env.spec().action_count};
    s.dist = SearchDistribution::isotropic(s.shape.weight_count(), cfg.init_sigma);
    s.hyper = default_hyper(s.dist.dim(), cfg.pop_scale, cfg.lr_scale);
    s.rng.seed(cfg.seed);
    return s;
}

// Checkpoint layout (little-endian):
//   8 bytes  magic "PNESCKPT"
//   u32      format version (1)
//   u64      config fingerprint
//   str      canonical config text (u32 length + bytes)
//   u64      generations completed
//   u32      controller inputs, u32 controller neurons
//   u32      lambda, f64 eta_mu, f64 eta_a
//   str      rng engine state (textual, as produced by operator<<)
//   dictionary block (IDVQDICT format)
//   distribution block (XNESDIST format)
inline constexpr std::string_view kCheckpointMagic = "PNESCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    RunConfig config;
    std::uint64_t fingerprint = 0;
    RunState state;
};

inline void write_checkpoint(std::ostream& out, const RunConfig& cfg, const RunState& s)
{
    io::write_magic(out, kCheckpointMagic);
    io::write_u32(out, kCheckpointVersion);
    io::write_u64(out, cfg.fingerprint());
    io::write_string(out, cfg.canonical_text());
    io::write_u64(out, s.generation);
    io::write_u32(out, static_cast<std::uint32_t>(s.shape.n_inputs));
    io::write_u32(out, static_cast<std::uint32_t>(s.shape.n_neurons));
    io::write_u32(out, static_cast<std::uint32_t>(s.hyper.lambda));
    io::write_f64(out, s.hyper.eta_mu);
    io::write_f64(out, s.hyper.eta_a);
    std::ostringstream rng_text;
    rng_text << s.rng;
    io::write_string(out, rng_text.str());
    write_dictionary(out, s.dict);
    write_distribution(out, s.dist);
}

inline Checkpoint read_checkpoint(std::istream& in)
{
    io::expect_magic(in, kCheckpointMagic);
    const auto version = io::read_u32(in);
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    Checkpoint c;
    c.fingerprint = io::read_u64(in);
    try {
        c.config = parse_config_text(io::read_string(in));
    } catch (const ContractViolation& e) {
        throw FormatError(std::string("checkpoint carries an invalid config: ") + e.what());
    }
    if (c.config.fingerprint() != c.fingerprint)
        throw FormatError("checkpoint config fingerprint mismatch");
    c.state.generation = io::read_u64(in);
    c.state.shape.n_inputs = io::read_u32(in);
    c.state.shape.n_neurons = io::read_u32(in);
    c.state.hyper.lambda = io::read_u32(in);
    c.state.hyper.eta_mu = io::read_f64(in);
    c.state.hyper.eta_a = io::read_f64(in);
    if (c.state.hyper.lambda < 1 || c.state.shape.n_neurons < 1)
        throw FormatError("checkpoint has an invalid shape or population size");
    c.state.hyper.utilities = shaping_utilities(c.state.hyper.lambda);
    std::istringstream rng_text(io::read_string(in));
    rng_text >> c.state.rng;
    if (!rng_text)
        throw FormatError("checkpoint rng state is corrupt");
    c.state.dict = read_dictionary(in);
    c.state.dist = read_distribution(in);
    if (!c.state.consistent())
        throw FormatError("checkpoint dictionary, controller and distribution sizes disagree");
    return c;
}

inline void save_checkpoint(const std::string& path, const RunConfig& cfg, const RunState& s)
{
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write checkpoint '" + tmp + "'");
        write_checkpoint(out, cfg, s);
        out.flush();
        if (!out)
            throw std::runtime_error("failed writing checkpoint '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open checkpoint '" + path + "'");
    return read_checkpoint(in);
}

class Trainer {
public:
    explicit Trainer(RunConfig cfg) : cfg_(std::move(cfg)), state_(initial_state(cfg_)) {}

    /// Continues from a checkpoint; the config must describe the same run.
    Trainer(RunConfig cfg, Checkpoint ckpt) : cfg_(std::move(cfg)), state_(std::move(ckpt.state))
    {
        cfg_.validate();
        if (cfg_.fingerprint() != ckpt.fingerprint)
            throw ContractViolation("config does not match the checkpoint's run configuration");
    }

    const RunConfig& config() const { return cfg_; }
    const RunState& state() const { return state_; }

    /// Best genome: the current distribution mean.
    std::vector<double> best_genome() const
    {
        return {state_.dist.mu.data(), state_.dist.mu.data() + state_.dist.mu.size()};
    }

    GenerationRecord run_generation()
    {
        const auto t0 = std::chrono::steady_clock::now();
        RunState next = state_;
        const std::uint64_t gen = next.generation;

        const SampleBatch batch = ask(next.dist, next.hyper, next.rng);
        const std::size_t lambda = batch.size();

        std::vector<double> fitness(lambda, 0.0);
        const std::size_t workers = std::min<std::size_t>(cfg_.threads, lambda);
        std::vector<TrainingSet> sets(workers, TrainingSet(cfg_.compressor.train_set_capacity));
        const std::uint64_t key_seed = splitmix64(cfg_.seed ^ splitmix64(gen + 0x5eed));
        const std::uint64_t per_individual = cfg_.evals_per_individual * (cfg_.max_interactions + 1);

        auto work = [&](std::size_t w) {
            Environment env = make_environment(cfg_);
            for (std::size_t k = w; k < lambda; k += workers) {
                ObservationSink sink{&sets[w], cfg_.compressor.selection, key_seed, k * per_individual};
                const std::vector<double> genome = batch.genome(k);
                fitness[k] = evaluate_individual(genome, env, state_.dict, state_.shape, cfg_, &sink);
            }
        };
        if (workers == 1) {
            work(0);
        } else {
            std::vector<std::exception_ptr> errors(workers);
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < workers; ++w)
                pool.emplace_back([&, w] {
                    try {
                        work(w);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            for (auto& t : pool)
                t.join();
            for (auto& e : errors)
                if (e)
                    std::rethrow_exception(e);
        }

        next.dist = tell(next.dist, next.hyper, batch, fitness);

        TrainingSet collected(cfg_.compressor.train_set_capacity);
        for (const auto& s : sets)
            collected.merge(s);
        const TrainReport report = idvq_train(collected, next.dict, cfg_.compressor);

        if (report.added > 0) {
            const std::size_t new_inputs = next.dict.size();
            const auto positions = expansion_insert_positions(next.shape, new_inputs);
            next.dist = expand_dims(next.dist, positions, cfg_.eps_var);
            next.shape.n_inputs = new_inputs;
            if (cfg_.recompute_hyper_on_expand)
                next.hyper = rehyper_after_expand(next.dist, cfg_.pop_scale, cfg_.lr_scale);
        }
        ++next.generation;
        if (!next.consistent())
            throw std::logic_error("generation left inconsistent dimensions");

        GenerationRecord rec;
        rec.gen = gen;
        rec.best = *std::max_element(fitness.begin(), fitness.end());
        rec.min = *std::min_element(fitness.begin(), fitness.end());
        rec.mean = std::accumulate(fitness.begin(), fitness.end(), 0.0) / static_cast<double>(lambda);
        rec.dict_size = next.dict.size();
        rec.params = next.dist.dim();
        rec.lambda = lambda;
        rec.train_samples = collected.size();
        rec.observations_seen = collected.seen_count();
        if (!report.residuals.empty()) {
            rec.train_residual_mean = std::accumulate(report.residuals.begin(), report.residuals.end(), 0.0) /
                                      static_cast<double>(report.residuals.size());
            rec.train_residual_max = *std::max_element(report.residuals.begin(), report.residuals.end());
        }
        if (cfg_.record_wall_time)
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        state_ = std::move(next);
        return rec;
    }

    void save(const std::string& path) const { save_checkpoint(path, cfg_, state_); }

private:
    RunConfig cfg_;
    RunState state_;
};

struct TrainResult {
    std::vector<GenerationRecord> records;
    std::string checkpoint_path;
    std::string metrics_path;
};

/**
 * Runs generations until `cfg.generations` are complete, writing
 * metrics.csv, training_set.csv and checkpoint.bin under `out_dir`.
 * With `resume_from`, continues that checkpoint and appends to the metrics.
 */
inline TrainResult train(const RunConfig& cfg, const std::string& out_dir,
                         const std::optional<std::string>& resume_from = std::nullopt,
                         const std::function<void(const GenerationRecord&)>& on_generation = {})
{
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    TrainResult result;
    result.checkpoint_path = (fs::path(out_dir) / "checkpoint.bin").string();
    result.metrics_path = (fs::path(out_dir) / "metrics.csv").string();
    const std::string training_path = (fs::path(out_dir) / "training_set.csv").string();

    std::optional<Trainer> trainer;
    if (resume_from)
        trainer.emplace(cfg, load_checkpoint(*resume_from));
    else
        trainer.emplace(cfg);

    const bool append = resume_from.has_value() && fs::exists(result.metrics_path);
    const auto mode = append ? std::ios::app : std::ios::trunc;
    std::ofstream metrics(result.metrics_path, std::ios::out | mode);
    std::ofstream training(training_path, std::ios::out | (append ? std::ios::app : std::ios::trunc));
    if (!metrics || !training)
        throw std::runtime_error("cannot open metrics files in '" + out_dir + "'");
    if (!append) {
        metrics << kMetricsHeader << '\n';
        training << "gen,samples,seen,mean_residual,max_residual\n";
    }

    while (trainer->state().generation < cfg.generations) {
        GenerationRecord rec = trainer->run_generation();
        metrics << format_metrics_row(rec) << '\n' << std::flush;
        training << format_training_row(rec) << '\n' << std::flush;
        if (!metrics || !training)
            throw std::runtime_error("failed writing metrics");
        if (on_generation)
            on_generation(rec);
        result.records.push_back(rec);
        if (cfg.checkpoint_every > 0 && trainer->state().generation % cfg.checkpoint_every == 0)
            trainer->save(result.checkpoint_path);
    }
    trainer->save(result.checkpoint_path);
    return result;
}

struct EvalReport {
    std::vector<double> scores;
    double mean = 0.0;
};

/// Replays the checkpoint's best genome (distribution mean) for `episodes` episodes.
inline EvalReport evaluate_checkpoint(const Checkpoint& ckpt, std::size_t episodes,
                                      const std::optional<std::string>& dump_dir = std::nullopt)
{
    require(episodes >= 1, "episodes must be >= 1");
    const RunConfig& cfg = ckpt.config;
    Environment env = make_environment(cfg);
    const auto& mu = ckpt.state.dist.mu;
    Controller controller(std::vector<double>(mu.data(), mu.data() + mu.size()), ckpt.state.shape, cfg.activation);
    if (dump_dir)
        std::filesystem::create_directories(*dump_dir);

    EvalReport report;
    for (std::size_t e = 0; e < episodes; ++e) {
        FrameHook hook;
        if (dump_dir)
            hook = [&](const Observation& obs, std::size_t step) {
                std::ostringstream name;
                name << "ep" << std::setw(3) << std::setfill('0') << e << "_" << std::setw(4) << step << ".pgm";
                std::ofstream out(std::filesystem::path(*dump_dir) / name.str(), std::ios::binary);
                write_pgm(out, obs);
            };
        report.scores.push_back(run_episode(controller, env, ckpt.state.dict, cfg, episode_seed(cfg, e), nullptr, 0, hook));
    }
    report.mean = std::accumulate(report.scores.begin(), report.scores.end(), 0.0) /
                  static_cast<double>(report.scores.size());
    return report;
}

/// Mean episode score of a uniformly random action policy.
inline double random_policy_score(const RunConfig& cfg, std::size_t episodes, std::uint64_t seed)
{
    Environment env = make_environment(cfg);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, env.spec().action_count - 1);
    double sum = 0.0;
    for (std::size_t e = 0; e < episodes; ++e) {
        env.reset(episode_seed(cfg, e));
        for (;;) {
            StepResult r = env.step(pick(rng), cfg.frameskip);
            sum += r.reward;
            if (r.terminal)
                break;
        }
    }
    return sum / static_cast<double>(episodes);
}

} // namespace pixelnes
