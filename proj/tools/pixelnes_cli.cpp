// Command-line front end: train, eval, encode, bench.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

#include <pixelnes/pixelnes.hpp>

using namespace pixelnes;

namespace {

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_dir,
              const std::optional<std::string>& resume)
{
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config_file(config_path);
    if (seed)
        cfg.seed = *seed;
    cfg.validate();
    std::cout << kMetricsHeader << '\n';
    const auto result = train(cfg, out_dir, resume,
                              [](const GenerationRecord& r) { std::cout << format_metrics_row(r) << std::endl; });
    std::cout << "checkpoint: " << result.checkpoint_path << "\nmetrics: " << result.metrics_path << '\n';
    return 0;
}

int cmd_eval(const std::string& ckpt_path, std::size_t episodes, const std::optional<std::string>& dump)
{
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const EvalReport report = evaluate_checkpoint(ckpt, episodes, dump);
    for (std::size_t i = 0; i < report.scores.size(); ++i)
        std::cout << "episode " << i << ": " << report.scores[i] << '\n';
    std::cout << "mean: " << report.mean << '\n';
    return 0;
}

int cmd_encode(const std::string& dict_path, const std::string& image_path, double epsilon, std::size_t omega)
{
    std::ifstream in(dict_path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open dictionary '" + dict_path + "'");
    Dictionary dict;
    // Accept a bare dictionary file or a full training checkpoint.
    char magic[8] = {};
    in.read(magic, 8);
    in.seekg(0);
    if (std::string_view(magic, 8) == kCheckpointMagic)
        dict = read_checkpoint(in).state.dict;
    else
        dict = read_dictionary(in);

    const Observation img = read_image_file(image_path);
    CompressorConfig cfg;
    cfg.epsilon = epsilon;
    cfg.omega = omega;
    cfg.validate();
    std::cout << drsc_encode(img, dict, cfg).to_string() << '\n';
    return 0;
}

double sphere(const Eigen::VectorXd& x) { return -x.squaredNorm(); }

void bench_xnes()
{
    std::cout << "dim,evals_to_1e-6,seconds\n";
    for (std::size_t dim : {5u, 10u, 20u}) {
        std::mt19937_64 rng(1);
        SearchDistribution d = SearchDistribution::isotropic(dim, 1.0, 1.0);
        const NesHyper h = default_hyper(dim);
        std::size_t evals = 0;
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t g = 0; g < 20000; ++g) {
            const SampleBatch b = ask(d, h, rng);
            std::vector<double> f(b.size());
            double best = -1e300;
            for (std::size_t k = 0; k < b.size(); ++k) {
                f[k] = sphere(b.genomes.row(static_cast<Eigen::Index>(k)).transpose());
                best = std::max(best, f[k]);
            }
            evals += b.size();
            d = tell(d, h, b, f);
            if (best > -1e-6)
                break;
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << dim << ',' << evals << ',' << secs << '\n';
    }
}

void bench_drsc()
{
    constexpr std::size_t image_len = 70 * 80;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::vector<float> img(image_len);
    for (auto& p : img)
        p = u(rng);
    CompressorConfig cfg;
    cfg.epsilon = 0.0;
    cfg.omega = 10;
    std::vector<double> xs, ys;
    std::cout << "dict_size,median_seconds\n";
    for (std::size_t n : {25u, 50u, 100u, 200u}) {
        Dictionary dict(image_len);
        std::vector<float> c(image_len);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& v : c)
                v = 0.1f * u(rng);
            dict.append(c);
        }
        std::vector<double> times;
        for (int r = 0; r < 15; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto code = drsc_encode(img, dict, cfg);
            times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            if (code.popcount() == 0)
                std::cerr << "unexpected empty code\n";
        }
        const double med = stats::median(times);
        xs.push_back(static_cast<double>(n));
        ys.push_back(med);
        std::cout << n << ',' << med << '\n';
    }
    std::cout << "linear_fit_r2," << stats::linear_fit(xs, ys).r_squared << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Pixel-based control with a growing sparse encoder and XNES-evolved recurrent policies"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "run";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> resume;
    auto* train_cmd = app.add_subcommand("train", "Run the generational training loop");
    train_cmd->add_option("--config", config_path, "key = value config file");
    train_cmd->add_option("--seed", seed, "Override the config seed");
    train_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    train_cmd->add_option("--resume", resume, "Continue from a checkpoint");

    std::string ckpt_path;
    std::size_t episodes = 5;
    std::optional<std::string> dump;
    auto* eval_cmd = app.add_subcommand("eval", "Replay the best genome of a checkpoint");
    eval_cmd->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
    eval_cmd->add_option("--episodes", episodes, "Number of episodes")->capture_default_str();
    eval_cmd->add_option("--dump-frames", dump, "Write every observation as a graymap into this directory");

    std::string dict_path, image_path;
    double epsilon = CompressorConfig{}.epsilon;
    std::size_t omega = CompressorConfig{}.omega;
    auto* encode_cmd = app.add_subcommand("encode", "Print the binary code of an image");
    encode_cmd->add_option("--dict", dict_path, "Dictionary or checkpoint file")->required();
    encode_cmd->add_option("--image", image_path, "Graymap (P2/P5) or float-rows image")->required();
    encode_cmd->add_option("--epsilon", epsilon, "Residual stopping threshold")->capture_default_str();
    encode_cmd->add_option("--omega", omega, "Maximum ones in the code")->capture_default_str();

    std::string suite;
    auto* bench_cmd = app.add_subcommand("bench", "Timing benchmarks");
    bench_cmd->add_option("--suite", suite, "Benchmark suite")->required()->check(CLI::IsMember({"xnes", "drsc"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd)
            return cmd_train(config_path, seed, out_dir, resume);
        if (*eval_cmd)
            return cmd_eval(ckpt_path, episodes, dump);
        if (*encode_cmd)
            return cmd_encode(dict_path, image_path, epsilon, omega);
        if (*bench_cmd) {
            if (suite == "xnes")
                bench_xnes();
            else
                bench_drsc();
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
