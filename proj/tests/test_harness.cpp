#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <pixelnes/harness.hpp>

using namespace pixelnes;
namespace fs = std::filesystem;

namespace {

RunConfig small_config()
{
    RunConfig c;
    c.generations = 4;
    c.evals_per_individual = 2;
    c.max_interactions = 20;
    c.frameskip = 1;
    c.grid = 4;
    c.cell_px = 2;
    c.obs_width = 4;
    c.obs_height = 4;
    c.compressor.epsilon = 0.005;
    c.compressor.train_set_capacity = 6;
    c.episode_seed_stride = 1;
    c.record_wall_time = false;
    c.checkpoint_every = 1;
    return c;
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("pixelnes_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST(Evaluate, ZeroGenomeNeverMovesAndScoresZero)
{
    const RunConfig cfg = small_config();
    Environment env = make_environment(cfg);
    const ControllerShape shape{0, 5};
    const std::vector<double> genome(shape.weight_count(), 0.0);
    EXPECT_DOUBLE_EQ(evaluate_individual(genome, env, Dictionary(16), shape, cfg), 0.0);
}

TEST(Evaluate, DeterministicForFixedGenome)
{
    RunConfig cfg = small_config();
    Environment env = make_environment(cfg);
    const ControllerShape shape{0, 5};
    std::vector<double> genome(shape.weight_count(), 0.0);
    genome[genotype_layout(shape).bias_index(4)] = 1.0; // always move right
    const double a = evaluate_individual(genome, env, Dictionary(16), shape, cfg);
    const double b = evaluate_individual(genome, env, Dictionary(16), shape, cfg);
    EXPECT_EQ(a, b);
}

TEST(Evaluate, RejectsShapeMismatch)
{
    const RunConfig cfg = small_config();
    Environment env = make_environment(cfg);
    const ControllerShape shape{0, 4};
    EXPECT_THROW(evaluate_individual(std::vector<double>(shape.weight_count()), env, Dictionary(16), shape, cfg),
                 ContractViolation);
}

TEST(Evaluate, HandBuiltGreedyControllerBeatsRandom)
{
    // One target centroid plus one centroid per agent cell; the controller maps
    // each agent cell to the greedy move toward the fixed target.
    RunConfig cfg = small_config();
    cfg.cell_px = 1;
    cfg.episode_seed_stride = 0;
    cfg.evals_per_individual = 1;
    const int n = static_cast<int>(cfg.grid);

    DotChaser probe(GameConfig{cfg.grid, cfg.cell_px});
    probe.reset(episode_seed(cfg, 0));
    const GridPos target = probe.target();
    const GridPos start = probe.agent();

    const std::size_t len = cfg.grid * cfg.grid;
    Dictionary dict(len);
    std::vector<float> c(len, 0.0f);
    c[static_cast<std::size_t>(target.y * n + target.x)] = 1.0f;
    dict.append(c);
    std::vector<GridPos> cells;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            if (GridPos{x, y} == target)
                continue;
            std::fill(c.begin(), c.end(), 0.0f);
            c[static_cast<std::size_t>(y * n + x)] = kAgentGray / 255.0f;
            dict.append(c);
            cells.push_back({x, y});
        }

    const ControllerShape shape{dict.size(), 5};
    const auto layout = genotype_layout(shape);
    std::vector<double> genome(shape.weight_count(), 0.0);
    for (std::size_t i = 0; i < cells.size(); ++i)
        genome[layout.input_index(DotChaser::greedy_action(cells[i], target), i + 1)] = 5.0;

    Environment env = make_environment(cfg);
    const double greedy = evaluate_individual(genome, env, dict, shape, cfg);
    EXPECT_DOUBLE_EQ(greedy, static_cast<double>(manhattan(start, target)));
    EXPECT_GT(greedy, random_policy_score(cfg, 20, 3));
}

TEST(Trainer, InitialStateHasNoInputs)
{
    const RunConfig cfg = small_config();
    const RunState s = initial_state(cfg);
    EXPECT_EQ(s.dict.size(), 0u);
    EXPECT_EQ(s.shape, (ControllerShape{0, 5}));
    EXPECT_EQ(s.dist.dim(), 30u); // recurrent weights and biases only
    EXPECT_TRUE(s.consistent());
}

TEST(Trainer, GrowthInsertsDimensionsAtLayoutPositions)
{
    RunConfig cfg = small_config();
    Trainer t(cfg);
    const RunState before = t.state();
    const GenerationRecord r = t.run_generation();
    const RunState& after = t.state();
    ASSERT_GT(after.dict.size(), before.dict.size());
    EXPECT_EQ(after.shape.n_inputs, after.dict.size());
    EXPECT_EQ(r.params, 5 * (after.dict.size() + 5 + 1));
    EXPECT_EQ(r.dict_size, after.dict.size());
    EXPECT_EQ(r.lambda, before.hyper.lambda);
    EXPECT_EQ(after.hyper, default_hyper(r.params, cfg.pop_scale, cfg.lr_scale));

    const auto pos = expansion_insert_positions(before.shape, after.shape.n_inputs);
    const double sd = std::sqrt(cfg.eps_var);
    const auto& a = after.dist.a;
    for (auto p : pos) {
        const auto i = static_cast<Eigen::Index>(p);
        EXPECT_EQ(after.dist.mu(i), 0.0);
        EXPECT_DOUBLE_EQ(a(i, i), sd);
        EXPECT_DOUBLE_EQ(a.row(i).cwiseAbs().sum(), sd);
        EXPECT_DOUBLE_EQ(a.col(i).cwiseAbs().sum(), sd);
    }
}

TEST(Trainer, SeededRunsWriteIdenticalFiles)
{
    const RunConfig cfg = small_config();
    const fs::path a = scratch("seed_a"), b = scratch("seed_b");
    train(cfg, a.string());
    train(cfg, b.string());
    EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
    EXPECT_EQ(slurp(a / "training_set.csv"), slurp(b / "training_set.csv"));
    EXPECT_EQ(slurp(a / "checkpoint.bin"), slurp(b / "checkpoint.bin"));

    RunConfig other = cfg;
    other.seed = 7;
    const fs::path c = scratch("seed_c");
    train(other, c.string());
    EXPECT_NE(slurp(a / "metrics.csv"), slurp(c / "metrics.csv"));
}

TEST(Trainer, ThreadCountDoesNotChangeTheRun)
{
    RunConfig one = small_config();
    RunConfig two = one;
    two.threads = 3;
    const fs::path a = scratch("thr_a"), b = scratch("thr_b");
    train(one, a.string());
    train(two, b.string());
    EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
    EXPECT_EQ(load_checkpoint((a / "checkpoint.bin").string()).state.dist,
              load_checkpoint((b / "checkpoint.bin").string()).state.dist);
}

TEST(Trainer, ResumeMatchesUninterruptedRun)
{
    RunConfig full = small_config();
    full.generations = 6;
    const fs::path a = scratch("resume_full"), b = scratch("resume_split");
    train(full, a.string());

    RunConfig first = full;
    first.generations = 3;
    train(first, b.string());
    const std::string ckpt = (b / "checkpoint.bin").string();
    train(full, b.string(), ckpt);

    EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
    EXPECT_EQ(slurp(a / "checkpoint.bin"), slurp(b / "checkpoint.bin"));
}

TEST(Trainer, FingerprintMismatchRejected)
{
    const RunConfig cfg = small_config();
    Trainer t(cfg);
    t.run_generation();
    std::stringstream buf;
    write_checkpoint(buf, cfg, t.state());
    Checkpoint ck = read_checkpoint(buf);

    RunConfig changed = cfg;
    changed.compressor.delta = 0.01;
    EXPECT_THROW(Trainer(changed, ck), ContractViolation);

    RunConfig harmless = cfg;
    harmless.threads = 4;
    harmless.generations = 99;
    EXPECT_NO_THROW(Trainer(harmless, ck));
}

TEST(Trainer, CheckpointRoundTripAndCorruption)
{
    const RunConfig cfg = small_config();
    Trainer t(cfg);
    t.run_generation();
    std::stringstream buf;
    write_checkpoint(buf, cfg, t.state());
    const std::string bytes = buf.str();
    std::stringstream in(bytes);
    const Checkpoint ck = read_checkpoint(in);
    EXPECT_EQ(ck.state.generation, 1u);
    EXPECT_EQ(ck.state.dist, t.state().dist);
    EXPECT_EQ(ck.state.rng, t.state().rng);
    EXPECT_EQ(ck.state.hyper, t.state().hyper);

    std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
    EXPECT_THROW(read_checkpoint(truncated), FormatError);
    std::string tampered = bytes;
    tampered[12] ^= 0x5a; // inside the fingerprint
    std::stringstream bad(tampered);
    EXPECT_THROW(read_checkpoint(bad), FormatError);
}

TEST(Trainer, ZeroGenerationsWritesHeaderAndInitialCheckpoint)
{
    RunConfig cfg = small_config();
    cfg.generations = 0;
    const fs::path d = scratch("zero");
    const auto r = train(cfg, d.string());
    EXPECT_TRUE(r.records.empty());
    EXPECT_EQ(slurp(d / "metrics.csv"), std::string(kMetricsHeader) + "\n");
    EXPECT_EQ(load_checkpoint(r.checkpoint_path).state.generation, 0u);
    EXPECT_FALSE(fs::exists(d / "checkpoint.bin.tmp"));
}

TEST(Trainer, EvaluateCheckpointDumpsFrames)
{
    RunConfig cfg = small_config();
    cfg.generations = 2;
    const fs::path d = scratch("evalck");
    const auto r = train(cfg, d.string());
    const EvalReport rep = evaluate_checkpoint(load_checkpoint(r.checkpoint_path), 2, (d / "frames").string());
    EXPECT_EQ(rep.scores.size(), 2u);
    EXPECT_FALSE(fs::is_empty(d / "frames"));
}

TEST(Metrics, RowFormat)
{
    GenerationRecord r;
    r.gen = 3;
    r.best = 2.5;
    r.mean = 1;
    r.min = -1;
    r.dict_size = 4;
    r.params = 50;
    r.lambda = 24;
    EXPECT_EQ(format_metrics_row(r), "3,2.5,1,-1,4,50,24,0");
    EXPECT_EQ(kMetricsHeader, "gen,best,mean,min,dict_size,params,lambda,seconds");
}

TEST(Config, ParsesCommentsAndRejectsUnknownKeys)
{
    const RunConfig c = parse_config_text("# run\n generations = 7 \nenv=avoider # inline\n\nselection = residual\n");
    EXPECT_EQ(c.generations, 7u);
    EXPECT_EQ(c.env, "avoider");
    EXPECT_EQ(c.compressor.selection, TrainingSelection::residual);
    EXPECT_THROW(parse_config_text("bogus = 1\n"), ContractViolation);
    EXPECT_THROW(parse_config_text("generations\n"), ContractViolation);
    EXPECT_THROW(parse_config_text("generations = -3\n"), ContractViolation);
    EXPECT_THROW(parse_config_text("delta = abc\n"), ContractViolation);
    EXPECT_THROW(parse_config_text("frameskip = 0\n"), ContractViolation);
}

TEST(Config, CanonicalTextRoundTrips)
{
    RunConfig c = small_config();
    c.activation = Activation::logistic;
    const RunConfig back = parse_config_text(c.canonical_text());
    EXPECT_EQ(back.canonical_text(), c.canonical_text());
    EXPECT_EQ(back.fingerprint(), c.fingerprint());
}

TEST(Config, FingerprintIgnoresExecutionOnlyKeys)
{
    RunConfig a, b;
    b.threads = 8;
    b.generations = 1;
    b.checkpoint_every = 3;
    b.record_wall_time = false;
    EXPECT_EQ(a.fingerprint(), b.fingerprint());
    b.seed = 43;
    EXPECT_NE(a.fingerprint(), b.fingerprint());
}
