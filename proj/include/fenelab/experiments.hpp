#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "fenelab/fene_sde.hpp"
#include "fenelab/fokker_planck.hpp"
#include "fenelab/spectral_noise.hpp"

// The four headline experiments behind the CLI: corrector convergence in N,
// stationary Monte Carlo versus the corrected weight, the tau -> 0 singular
// limit sweep, and the single-realization (pathwise) comparison against the
// deterministic Fokker-Planck solution.

namespace fenelab::experiments {

struct CorrectorRow {
    int shell_index;
    double sup_error; // sup over the r-grid of |A^N(r) - A(r)|_F
};

struct CorrectorStudy {
    std::vector<CorrectorRow> rows;
    double slope; // NaN when fewer than two rows
};

CorrectorStudy corrector_convergence(std::span<const int> shell_list, const noise::PhysParams& p,
                                     double r_max, int r_points);

// Pearson chi-square against expected bin masses, merging sparse tail bins
// (expected count < min_expected) into their inner neighbor.
struct ChiSquare {
    double statistic;
    int used_bins;
};
ChiSquare chi_square_statistic(std::span<const std::uint64_t> counts,
                               std::span<const double> expected_mass, double n,
                               double min_expected = 5.0);

// Empirical bin densities with cluster-robust standard errors, clustering by
// initial torus position (pathwise runs share one flow realization, so
// nearby particles are correlated).
struct ClusteredHistogram {
    std::vector<double> density;
    std::vector<double> stderr_;
};
ClusteredHistogram clustered_histogram(std::span<const sde::ParticleState> final_states,
                                       std::span<const sde::ParticleState> initial_states,
                                       int n_bins, int clusters_per_side);

// Bin-averaged radial marginal 2 pi s f(s) of a cell-averaged density.
std::vector<double> binned_marginal(const fpe::RadialDensity& f, int n_bins);

struct Outcome {
    int exit_code; // 0 checks passed, 1 check failure, 2 config/runtime error
    nlohmann::json summary;
};

Outcome run_corrector(const nlohmann::json& cfg, const std::filesystem::path& out_dir);
Outcome run_stationary(const nlohmann::json& cfg, const std::filesystem::path& out_dir, bool strict);
Outcome run_singular_limit(const nlohmann::json& cfg, const std::filesystem::path& out_dir);
Outcome run_pathwise(const nlohmann::json& cfg, const std::filesystem::path& out_dir);

int cli_main(int argc, char** argv);

} // namespace fenelab::experiments
