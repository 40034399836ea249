#pragma once

// Run configuration and its flat `key = value` text form.
//
//   # comment
//   generations = 100
//   env = dot_chaser
//
// Unknown keys are rejected. `canonical_text` writes every key in a fixed
// order; its FNV-1a hash (minus the keys that do not affect the trajectory)
// fingerprints a run for checkpoint compatibility checks.

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "binary_io.hpp"
#include "compressor.hpp"
#include "controller.hpp"
#include "error.hpp"

namespace pixelnes {

struct RunConfig {
    std::size_t generations = 100;
    std::size_t evals_per_individual = 5;
    std::size_t max_interactions = 200;
    std::size_t frameskip = 5;
    double pop_scale = 1.5;
    double lr_scale = 0.5;
    double init_sigma = 1.0;
    double eps_var = 1e-4;
    bool recompute_hyper_on_expand = true;
    Activation activation = Activation::tanh;
    CompressorConfig compressor;

    std::string env = "dot_chaser";
    std::size_t grid = 8;
    std::size_t cell_px = 4;
    std::size_t obs_width = 16;
    std::size_t obs_height = 16;
    std::uint64_t env_seed = 1;
    std::uint64_t episode_seed_stride = 0; ///< episode e of an evaluation resets with env_seed + e*stride

    std::uint64_t seed = 42;
    std::size_t threads = 1;
    std::size_t checkpoint_every = 10;
    bool record_wall_time = true;

    void validate() const
    {
        require(evals_per_individual >= 1, "evals_per_individual must be >= 1");
        require(max_interactions >= 1, "max_interactions must be >= 1");
        require(frameskip >= 1, "frameskip must be >= 1");
        require(pop_scale > 0.0 && lr_scale > 0.0, "pop_scale and lr_scale must be positive");
        require(init_sigma > 0.0, "init_sigma must be positive");
        require(eps_var > 0.0, "eps_var must be positive");
        require(obs_width >= 1 && obs_height >= 1, "observation size must be positive");
        require(threads >= 1, "threads must be >= 1");
        compressor.validate();
    }

    std::string canonical_text() const;
    std::uint64_t fingerprint() const;
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value)
{
    std::istringstream in(value);
    T v{};
    in >> v;
    if (!in || !(in >> std::ws).eof())
        throw ContractViolation("config key '" + key + "': cannot parse '" + value + "'");
    if constexpr (std::is_unsigned_v<T>)
        if (!value.empty() && value.front() == '-')
            throw ContractViolation("config key '" + key + "' must be non-negative");
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& value)
{
    if (value == "true" || value == "1" || value == "yes")
        return true;
    if (value == "false" || value == "0" || value == "no")
        return false;
    throw ContractViolation("config key '" + key + "': expected a boolean, got '" + value + "'");
}

inline std::string format_double(double v)
{
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

struct ConfigField {
    std::string key;
    bool affects_trajectory;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define PIXELNES_UINT_FIELD(name, member, traj)                                                                        \
    ConfigField                                                                                                        \
    {                                                                                                                  \
        name, traj, [](RunConfig& c, const std::string& v) { c.member = parse_number<decltype(c.member)>(name, v); }, \
            [](const RunConfig& c) { return std::to_string(c.member); }                                                \
    }
#define PIXELNES_REAL_FIELD(name, member, traj)                                                                        \
    ConfigField                                                                                                        \
    {                                                                                                                  \
        name, traj, [](RunConfig& c, const std::string& v) { c.member = parse_number<double>(name, v); },             \
            [](const RunConfig& c) { return format_double(c.member); }                                                 \
    }
#define PIXELNES_BOOL_FIELD(name, member, traj)                                                                        \
    ConfigField                                                                                                        \
    {                                                                                                                  \
        name, traj, [](RunConfig& c, const std::string& v) { c.member = parse_bool(name, v); },                       \
            [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }                                \
    }

inline const std::vector<ConfigField>& config_fields()
{
    static const std::vector<ConfigField> fields = {
        PIXELNES_UINT_FIELD("generations", generations, false),
        PIXELNES_UINT_FIELD("evals_per_individual", evals_per_individual, true),
        PIXELNES_UINT_FIELD("max_interactions", max_interactions, true),
        PIXELNES_UINT_FIELD("frameskip", frameskip, true),
        PIXELNES_REAL_FIELD("pop_scale", pop_scale, true),
        PIXELNES_REAL_FIELD("lr_scale", lr_scale, true),
        PIXELNES_REAL_FIELD("init_sigma", init_sigma, true),
        PIXELNES_REAL_FIELD("eps_var", eps_var, true),
        PIXELNES_BOOL_FIELD("recompute_hyper_on_expand", recompute_hyper_on_expand, true),
        ConfigField{"activation", true,
                    [](RunConfig& c, const std::string& v) { c.activation = parse_activation(v); },
                    [](const RunConfig& c) { return to_string(c.activation); }},
        PIXELNES_REAL_FIELD("delta", compressor.delta, true),
        PIXELNES_REAL_FIELD("epsilon", compressor.epsilon, true),
        PIXELNES_UINT_FIELD("omega", compressor.omega, true),
        PIXELNES_UINT_FIELD("train_set_capacity", compressor.train_set_capacity, true),
        ConfigField{"selection", true,
                    [](RunConfig& c, const std::string& v) {
                        if (v == "uniform")
                            c.compressor.selection = TrainingSelection::uniform;
                        else if (v == "residual")
                            c.compressor.selection = TrainingSelection::residual;
                        else
                            throw ContractViolation("config key 'selection': expected uniform or residual");
                    },
                    [](const RunConfig& c) {
                        return std::string(c.compressor.selection == TrainingSelection::residual ? "residual"
                                                                                                 : "uniform");
                    }},
        ConfigField{"env", true, [](RunConfig& c, const std::string& v) { c.env = v; },
                    [](const RunConfig& c) { return c.env; }},
        PIXELNES_UINT_FIELD("grid", grid, true),
        PIXELNES_UINT_FIELD("cell_px", cell_px, true),
        PIXELNES_UINT_FIELD("obs_width", obs_width, true),
        PIXELNES_UINT_FIELD("obs_height", obs_height, true),
        PIXELNES_UINT_FIELD("env_seed", env_seed, true),
        PIXELNES_UINT_FIELD("episode_seed_stride", episode_seed_stride, true),
        PIXELNES_UINT_FIELD("seed", seed, true),
        PIXELNES_UINT_FIELD("threads", threads, false),
        PIXELNES_UINT_FIELD("checkpoint_every", checkpoint_every, false),
        PIXELNES_BOOL_FIELD("record_wall_time", record_wall_time, false),
    };
    return fields;
}

#undef PIXELNES_UINT_FIELD
#undef PIXELNES_REAL_FIELD
#undef PIXELNES_BOOL_FIELD

} // namespace detail

inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value)
{
    for (const auto& f : detail::config_fields()) {
        if (f.key == key) {
            f.set(cfg, value);
            return;
        }
    }
    throw ContractViolation("unknown config key '" + key + "'");
}

inline RunConfig parse_config(std::istream& in, RunConfig base = {})
{
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ContractViolation("config line " + std::to_string(lineno) + ": expected key = value");
        set_config_value(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    base.validate();
    return base;
}

inline RunConfig parse_config_text(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

inline RunConfig load_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config '" + path + "'");
    return parse_config(in);
}

inline std::string RunConfig::canonical_text() const
{
    std::string out;
    for (const auto& f : detail::config_fields())
        out += f.key + " = " + f.get(*this) + "\n";
    return out;
}

inline std::uint64_t RunConfig::fingerprint() const
{
    std::string text;
    for (const auto& f : detail::config_fields())
        if (f.affects_trajectory)
            text += f.key + "=" + f.get(*this) + "\n";
    return io::fnv1a(text);
}

} // namespace pixelnes
