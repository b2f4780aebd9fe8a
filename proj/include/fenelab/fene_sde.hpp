#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fenelab/geometry.hpp"
#include "fenelab/spectral_noise.hpp"

// Microscopic FENE dumbbell dynamics under the spectral turbulent noise:
//   dR = grad u(X) R dt - (kappa/beta) R/(1-|R|^2) dt + sqrt(2/beta) dW~
//   dX = u(X) dt
// integrated by operator splitting (transport, Stratonovich stretch,
// thermal kick, implicit spring). The implicit spring solve maps any
// intermediate magnitude back into [0,1), so |R| < 1 holds at every step.

namespace fenelab::sde {

struct ParticleState {
    Vec2 x; // torus position, coordinates in [0, 2pi)
    Vec2 r; // end-to-end vector, |r| < 1
};

enum class InitLaw {
    Origin,   // all dumbbells coiled at R = 0
    Thermal,  // radial law ~ s (1-s^2)^(kappa/2) (no-flow equilibrium)
    Corrected // radial law ~ s * M0(s; kappa, gamma)
};

struct EnsembleConfig {
    std::size_t n_particles = 1000;
    double dt = 1e-3;
    double t_end = 1.0;
    std::uint64_t seed = 0;
    // One turbulent realization shared by all particles (the pathwise
    // setting) versus an independent realization per particle.
    bool shared_flow = false;
    InitLaw init = InitLaw::Thermal;
    std::size_t output_every = 0; // steps between summary rows; 0 = auto
};

struct SummaryPoint {
    double t;
    double mean_sq_elong;
    double frac_stretched; // fraction with |R| > 0.9
};

struct EnsembleResult {
    std::vector<ParticleState> initial_states;
    std::vector<ParticleState> final_states;
    std::vector<SummaryPoint> series;
    std::uint64_t boundary_violations = 0;
    double max_abs_r = 0.0;
};

// Unique b in [0,1) with b (1 + c/(1-b^2)) = a; residual <= 1e-12.
// c = 0 requires a < 1, otherwise the step is unsolvable.
double implicit_spring_root(double a, double c);

// One splitting step driven by explicit per-mode flow increments (Gaussians
// already scaled by sqrt(dt), in mode enumeration order) and a thermal
// increment (scaled by sqrt(dt)).
ParticleState step_particle(const ParticleState& st, const noise::PhysParams& p,
                            const noise::ModeSet& m, double dt,
                            std::span<const double> flow_increments, Vec2 thermal_increment);

EnsembleResult simulate_ensemble(const EnsembleConfig& cfg, const noise::PhysParams& p,
                                 const noise::ModeSet& m);

struct Histogram {
    std::vector<double> left, right; // bin edges
    std::vector<std::uint64_t> counts;
    std::vector<double> density; // integrates to 1 with bin widths
    std::vector<double> stderr_; // per-bin Monte Carlo standard error of density
};

Histogram elongation_histogram(std::span<const ParticleState> states, int n_bins);

// Normalized bin averages of the reference radial marginal s * M0(s; kappa, gamma).
std::vector<double> reference_marginal(double kappa, double gamma, int n_bins);

// Inverse-CDF draws from the reference marginal (uniform angle, uniform torus
// position); oracle sampler for histogram tests.
std::vector<ParticleState> draw_reference_states(std::size_t n, double kappa, double gamma,
                                                 std::uint64_t seed);

} // namespace fenelab::sde
