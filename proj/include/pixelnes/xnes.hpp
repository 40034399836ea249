#pragma once

/**
 * @file xnes.hpp
 * @brief Exponential Natural Evolution Strategy with an ask/tell interface and
 * mid-run dimension insertion.
 *
 * The search distribution is N(mu, Sigma) with Sigma = A^T A. Samples are
 * z_k = mu + A^T s_k with s_k ~ N(0, I). Updates happen in exponential local
 * coordinates using the stored s_k:
 *
 *   G_delta = sum_k u_k s_k
 *   G_M     = sum_k u_k (s_k s_k^T - I)
 *   mu     <- mu + eta_mu * A^T G_delta
 *   A      <- expm(eta_A / 2 * G_M) * A
 *
 * The last line is the local-coordinate factor update written for the
 * Sigma = A^T A convention (A^T picks up the right-hand exponential factor).
 * A is kept as a general square-root factor; `triangular_factor` recovers the
 * upper-triangular Cholesky form when needed.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "binary_io.hpp"
#include "error.hpp"

namespace pixelnes {

struct SearchDistribution {
    Eigen::VectorXd mu;
    Eigen::MatrixXd a; ///< Sigma = a^T a

    static SearchDistribution isotropic(std::size_t dim, double sigma, double mean = 0.0)
    {
        require(sigma > 0.0, "initial sigma must be positive");
        return {Eigen::VectorXd::Constant(static_cast<Eigen::Index>(dim), mean),
                sigma * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))};
    }

    std::size_t dim() const { return static_cast<std::size_t>(mu.size()); }

    Eigen::MatrixXd covariance() const { return a.transpose() * a; }

    void validate() const
    {
        require(a.rows() == mu.size() && a.cols() == mu.size(), "distribution factor has wrong shape");
        require(mu.allFinite() && a.allFinite(), "distribution contains non-finite values");
    }

    bool operator==(const SearchDistribution& o) const
    {
        return mu.size() == o.mu.size() && a.rows() == o.a.rows() && a.cols() == o.a.cols() && mu == o.mu &&
               a == o.a;
    }
};

struct NesHyper {
    std::size_t lambda = 0;
    double eta_mu = 1.0;
    double eta_a = 0.0;
    std::vector<double> utilities; ///< by rank, best first

    bool operator==(const NesHyper&) const = default;
};

/// Zero-sum, rank-based fitness shaping utilities, best rank first.
inline std::vector<double> shaping_utilities(std::size_t lambda)
{
    require(lambda >= 1, "population size must be >= 1");
    const double lam = static_cast<double>(lambda);
    std::vector<double> raw(lambda);
    for (std::size_t k = 1; k <= lambda; ++k)
        raw[k - 1] = std::max(0.0, std::log(lam / 2.0 + 1.0) - std::log(static_cast<double>(k)));
    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    std::vector<double> u(lambda);
    for (std::size_t k = 0; k < lambda; ++k)
        u[k] = raw[k] / total - 1.0 / lam;
    return u;
}

/**
 * Standard XNES defaults for dimension p, with the population size scaled by
 * `pop_scale` and the covariance learning rate scaled by `lr_scale`.
 * The mean learning rate stays at 1.
 */
inline NesHyper default_hyper(std::size_t p, double pop_scale = 1.5, double lr_scale = 0.5)
{
    require(p >= 1, "distribution dimension must be >= 1");
    require(pop_scale > 0.0 && lr_scale > 0.0, "hyperparameter scales must be positive");
    const double dim = static_cast<double>(p);
    const double base_lambda = 4.0 + std::floor(3.0 * std::log(dim));
    NesHyper h;
    h.lambda = static_cast<std::size_t>(std::max(2L, std::lround(pop_scale * base_lambda)));
    h.eta_mu = 1.0;
    h.eta_a = lr_scale * (9.0 + 3.0 * std::log(dim)) / (5.0 * dim * std::sqrt(dim));
    h.utilities = shaping_utilities(h.lambda);
    return h;
}

struct SampleBatch {
    Eigen::MatrixXd std_normals; ///< lambda x p
    Eigen::MatrixXd genomes;     ///< lambda x p, row k = mu + A^T s_k

    std::size_t size() const { return static_cast<std::size_t>(genomes.rows()); }
    std::vector<double> genome(std::size_t k) const
    {
        const Eigen::VectorXd row = genomes.row(static_cast<Eigen::Index>(k)).transpose();
        return {row.data(), row.data() + row.size()};
    }
};

template <typename Rng>
SampleBatch ask(const SearchDistribution& dist, const NesHyper& hyper, Rng& rng)
{
    dist.validate();
    const auto lambda = static_cast<Eigen::Index>(hyper.lambda);
    const auto p = static_cast<Eigen::Index>(dist.dim());
    // Fresh distribution object per call so the engine alone carries the stream state.
    std::normal_distribution<double> normal(0.0, 1.0);
    SampleBatch b;
    b.std_normals.resize(lambda, p);
    for (Eigen::Index k = 0; k < lambda; ++k)
        for (Eigen::Index j = 0; j < p; ++j)
            b.std_normals(k, j) = normal(rng);
    // rows: z_k^T = mu^T + s_k^T A
    b.genomes = (b.std_normals * dist.a).rowwise() + dist.mu.transpose();
    return b;
}

/// Utility per individual (not per rank); tied fitnesses share the mean utility of their ranks.
inline std::vector<double> assign_utilities(const std::vector<double>& fitnesses, const std::vector<double>& by_rank)
{
    require(fitnesses.size() == by_rank.size(), "fitness count does not match population size");
    for (double f : fitnesses)
        require(std::isfinite(f), "fitness values must be finite");

    const std::size_t n = fitnesses.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return fitnesses[i] > fitnesses[j]; });

    std::vector<double> out(n);
    for (std::size_t start = 0; start < n;) {
        std::size_t end = start + 1;
        while (end < n && fitnesses[order[end]] == fitnesses[order[start]])
            ++end;
        double mean = 0.0;
        for (std::size_t r = start; r < end; ++r)
            mean += by_rank[r];
        mean /= static_cast<double>(end - start);
        for (std::size_t r = start; r < end; ++r)
            out[order[r]] = mean;
        start = end;
    }
    return out;
}

/// Matrix exponential of a symmetric matrix via eigendecomposition.
inline Eigen::MatrixXd symmetric_expm(const Eigen::MatrixXd& m)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition failed in matrix exponential");
    const Eigen::VectorXd e = eig.eigenvalues().array().exp();
    return eig.eigenvectors() * e.asDiagonal() * eig.eigenvectors().transpose();
}

inline SearchDistribution tell(const SearchDistribution& dist, const NesHyper& hyper, const SampleBatch& batch,
                               const std::vector<double>& fitnesses)
{
    dist.validate();
    require(batch.size() == hyper.lambda && fitnesses.size() == hyper.lambda,
            "batch and fitness count must equal the population size");
    require(static_cast<std::size_t>(batch.std_normals.cols()) == dist.dim(), "batch dimension mismatch");

    const std::vector<double> u = assign_utilities(fitnesses, hyper.utilities);
    const auto p = static_cast<Eigen::Index>(dist.dim());

    Eigen::VectorXd g_delta = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd g_m = Eigen::MatrixXd::Zero(p, p);
    double u_sum = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const Eigen::VectorXd s = batch.std_normals.row(static_cast<Eigen::Index>(k)).transpose();
        g_delta += u[k] * s;
        g_m.noalias() += u[k] * (s * s.transpose());
        u_sum += u[k];
    }
    g_m.diagonal().array() -= u_sum;

    SearchDistribution next;
    next.mu = dist.mu + hyper.eta_mu * (dist.a.transpose() * g_delta);
    next.a = symmetric_expm(0.5 * hyper.eta_a * g_m) * dist.a;
    return next;
}

/// Inserts zero-mean coordinates with zero covariance and variance eps_var.
/// Positions are indices in the enlarged vector.
inline SearchDistribution expand_dims(const SearchDistribution& dist, std::vector<std::size_t> positions,
                                      double eps_var = 1e-4)
{
    dist.validate();
    require(eps_var > 0.0, "inserted variance must be positive");
    std::sort(positions.begin(), positions.end());
    require(std::adjacent_find(positions.begin(), positions.end()) == positions.end(),
            "insert positions must be distinct");
    const std::size_t new_dim = dist.dim() + positions.size();
    require(positions.empty() || positions.back() < new_dim, "insert position out of range");
    if (positions.empty())
        return dist;

    // old index -> new index
    std::vector<Eigen::Index> map;
    map.reserve(dist.dim());
    std::vector<bool> inserted(new_dim, false);
    for (auto pos : positions)
        inserted[pos] = true;
    for (std::size_t i = 0; i < new_dim; ++i)
        if (!inserted[i])
            map.push_back(static_cast<Eigen::Index>(i));

    const auto n = static_cast<Eigen::Index>(new_dim);
    SearchDistribution out;
    out.mu = Eigen::VectorXd::Zero(n);
    out.a = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < map.size(); ++i) {
        out.mu(map[i]) = dist.mu(static_cast<Eigen::Index>(i));
        for (std::size_t j = 0; j < map.size(); ++j)
            out.a(map[i], map[j]) = dist.a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    const double sd = std::sqrt(eps_var);
    for (auto pos : positions)
        out.a(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(pos)) = sd;
    return out;
}

/// Covariance-level form of expand_dims: the enlarged Sigma built by insertion alone.
inline Eigen::MatrixXd expand_covariance(const Eigen::MatrixXd& sigma, std::vector<std::size_t> positions,
                                         double eps_var = 1e-4)
{
    require(eps_var > 0.0, "inserted variance must be positive");
    std::sort(positions.begin(), positions.end());
    const auto new_dim = static_cast<std::size_t>(sigma.rows()) + positions.size();
    std::vector<bool> inserted(new_dim, false);
    for (auto pos : positions) {
        require(pos < new_dim, "insert position out of range");
        inserted[pos] = true;
    }
    std::vector<Eigen::Index> map;
    for (std::size_t i = 0; i < new_dim; ++i)
        if (!inserted[i])
            map.push_back(static_cast<Eigen::Index>(i));
    const auto n = static_cast<Eigen::Index>(new_dim);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < map.size(); ++i)
        for (std::size_t j = 0; j < map.size(); ++j)
            out(map[i], map[j]) = sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    for (auto pos : positions)
        out(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(pos)) = eps_var;
    return out;
}

inline NesHyper rehyper_after_expand(const SearchDistribution& dist, double pop_scale, double lr_scale)
{
    return default_hyper(dist.dim(), pop_scale, lr_scale);
}

/// Upper-triangular U with Sigma = U^T U (positive diagonal).
inline Eigen::MatrixXd triangular_factor(const Eigen::MatrixXd& sigma)
{
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw ContractViolation("covariance is not positive definite");
    return llt.matrixU();
}

inline double min_eigenvalue(const Eigen::MatrixXd& sym)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

// Distribution file layout (little-endian):
//   8 bytes  magic "XNESDIST"
//   u32      format version (1)
//   u32      dimension p
//   f64[p]   mean
//   f64[p*p] factor A, row-major
inline constexpr std::string_view kDistributionMagic = "XNESDIST";
inline constexpr std::uint32_t kDistributionVersion = 1;

inline void write_distribution(std::ostream& out, const SearchDistribution& dist)
{
    io::write_magic(out, kDistributionMagic);
    io::write_u32(out, kDistributionVersion);
    io::write_u32(out, static_cast<std::uint32_t>(dist.dim()));
    for (Eigen::Index i = 0; i < dist.mu.size(); ++i)
        io::write_f64(out, dist.mu(i));
    for (Eigen::Index r = 0; r < dist.a.rows(); ++r)
        for (Eigen::Index c = 0; c < dist.a.cols(); ++c)
            io::write_f64(out, dist.a(r, c));
}

inline SearchDistribution read_distribution(std::istream& in)
{
    io::expect_magic(in, kDistributionMagic);
    const auto version = io::read_u32(in);
    if (version != kDistributionVersion)
        throw FormatError("unsupported distribution version " + std::to_string(version));
    const auto p = static_cast<Eigen::Index>(io::read_u32(in));
    if (p > 100000)
        throw FormatError("distribution dimension implausibly large");
    SearchDistribution d{Eigen::VectorXd(p), Eigen::MatrixXd(p, p)};
    for (Eigen::Index i = 0; i < p; ++i)
        d.mu(i) = io::read_f64(in);
    for (Eigen::Index r = 0; r < p; ++r)
        for (Eigen::Index c = 0; c < p; ++c)
            d.a(r, c) = io::read_f64(in);
    if (!d.mu.allFinite() || !d.a.allFinite())
        throw FormatError("distribution file contains non-finite values");
    return d;
}

} // namespace pixelnes
