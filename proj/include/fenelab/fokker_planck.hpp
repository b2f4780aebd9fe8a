#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fenelab/geometry.hpp"
#include "fenelab/weights.hpp"

// Deterministic limit equation on the radial reduction,
//   d_t f = (1/(zeta tau)) div_r( M0 (I + A(r)) grad_r (f/M0) ),
// discretized by a conservative finite-volume scheme in the quotient
// variable g = f/M0. On radial functions the anisotropic part acts as the
// scalar mobility (1 + alpha s^2), and the cell-sampled M0 is an exact
// discrete stationary state. x enters only as a passive slice index.

namespace fenelab::fpe {

struct RadialGrid {
    int n_cells = 0;
    double grading = 1.0;
    std::vector<double> faces;   // n_cells + 1, from 0 to 1
    std::vector<double> centers; // n_cells
    std::vector<double> volumes; // disc cell areas pi (s_{j+1}^2 - s_j^2)

    static RadialGrid build(int n_cells, double grading = 2.0);
};

struct RadialDensity {
    RadialGrid grid;
    std::size_t n_slices = 1;
    std::vector<double> values; // slice-major, n_slices * n_cells cell averages

    std::span<double> slice(std::size_t i);
    std::span<const double> slice(std::size_t i) const;
    double slice_mass(std::size_t i) const;
};

// Assembled flux stencil and weight tables. prefactor = 1/(zeta tau).
class RadialOperator {
  public:
    RadialGrid grid;
    double kappa = 0.0;
    double alpha = 0.0;
    double prefactor = 1.0;
    bool validated_regime = true; // kappa/(2(1+alpha)) > 1

    std::vector<double> m0_center;    // discrete-normalized M0 at cell centers
    std::vector<double> face_conduct; // 2 pi s_f M0(s_f)(1+alpha s_f^2)/(dc), interior faces
    std::vector<double> face_plain;   // 2 pi s_f M0(s_f)/(dc), for the V0 seminorm

    // L f on one slice (out may not alias f)
    void apply(std::span<const double> f, std::span<double> out) const;
};

RadialGrid build_radial_grid(int n_cells, double grading = 2.0);

RadialOperator assemble_radial_operator(const RadialGrid& g, double kappa, double alpha,
                                        double zeta_tau);

// Normalized kernel vector: cell-sampled M0 at unit mass, one slice.
RadialDensity steady_state(const RadialOperator& op);

enum class Scheme { ImplicitEuler, CrankNicolson };

enum class NormKind { H0, V0Seminorm };

struct TrajectoryPoint {
    double t;
    double h0_distance; // H0 distance to the per-slice-mass stationary state
    std::vector<double> slice_mass;
};

struct EvolveResult {
    RadialDensity density;
    std::vector<TrajectoryPoint> trace;
};

EvolveResult evolve(const RadialDensity& f0, const RadialOperator& op, double dt, double t_end,
                    Scheme scheme = Scheme::ImplicitEuler, std::size_t output_every = 0);

// Weighted norms against the operator's discrete M0 tables.
double weighted_norm(const RadialDensity& f, const RadialOperator& op, NormKind kind);
// Spec-facing overload: samples the WeightSpec at cell centers and
// discrete-normalizes it over the grid.
double weighted_norm(const RadialDensity& f, const weights::WeightSpec& w, NormKind kind);

// H0 distance between two densities on the same grid.
double h0_distance(const RadialDensity& a, const RadialDensity& b, const RadialOperator& op);

// Smallest nonzero eigenvalue of the weighted symmetric form (prefactor 1).
// 1/lambda_1 estimates the Poincare constant C_P.
double spectral_gap(const RadialOperator& op);

struct SweepRow {
    double tau;
    double integral_distance; // int_0^T |f_tau - rho0 x M0|_H0^2 dt
    bool ok;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double fitted_slope; // log-log slope of integral vs tau (NaN if < 2 valid rows)
    bool mass_identity_ok;
    double max_mass_drift;
};

// Evolves the same f0 for each tau with prefactor 1/(zeta tau) and integrates
// the squared H0 distance to rho0 x M0 by trapezoid in t.
SweepResult singular_limit_sweep(std::span<const double> tau_list, double zeta,
                                 const RadialDensity& f0, double kappa, double alpha,
                                 double t_end, std::size_t n_steps = 400);

// Least-squares slope of log(y) against log(x); helper for rate fits.
double loglog_slope(std::span<const double> x, std::span<const double> y);

} // namespace fenelab::fpe
