#pragma once

#include <span>
#include <stdexcept>
#include <vector>

// Radial weight family on the unit disc: the FENE weight M, the corrected
// weight M0 (stationary state of the limit operator), the intermediate
// weight M_eps used when removing the noise cut-off, and the cut-off
// profile phi_eps itself. All weights are radial; s denotes |r|.

namespace fenelab::weights {

enum class Kind { Fene, Corrected, Epsilon };

struct WeightSpec {
    Kind kind = Kind::Fene;
    double kappa = 1.0;
    double gamma = 0.0;   // corrected / epsilon kinds; sigma = lambda*beta/(2 tau)
    double epsilon = 0.0; // epsilon kind only
    bool normalized = false;
    double Z = 1.0; // disc normalization, set when normalized

    double operator()(double s) const;
};

// (1 - s^2)^(kappa/2), unnormalized
double fene_weight(double s, double kappa);

// ((1 - s^2)/(1 + gamma s^2))^(kappa/(2(1+gamma))), unnormalized
double corrected_weight(double s, double kappa, double gamma);

// Cut-off: 1 on 1-s >= 2 eps, 0 on 1-s <= eps, cubic smoothstep between.
// Max slope 1.5/eps, within the C/eps gradient bound with C = 2.
double cutoff_profile(double s, double epsilon);

// exp(-kappa int_0^s u du / ((1-u^2)(1 + sigma phi_eps(u)^2 u^2))), quadrature
// relative tolerance <= 1e-10. Returns 0 at s = 1 (limit value).
double epsilon_weight(double s, double kappa, double sigma, double epsilon);

// Z = 2 pi int_0^1 s w(s) ds with dyadic refinement toward the degenerate
// boundary; relative error <= 1e-10.
double disc_normalize(const WeightSpec& w);

// Returns a copy of w with Z computed and the normalized flag set.
WeightSpec normalized(WeightSpec w);

struct RegimeReport {
    double h = 0.0;      // coil-stretch exponent kappa/(2(1+gamma))
    double gamma = 0.0;  // k_T beta / 2
    double wi = 0.0;     // Weissenberg number 2 k_T beta / kappa (Lambda = 2 k_T, tau_p = beta/kappa)
    double kT_beta = 0.0;
    double smallness_threshold = 0.1;
    bool hardy_ok = false;     // h > 1
    bool smallness_ok = false; // k_T beta <= threshold
    bool cutoff_required = false;
};

RegimeReport coil_stretch_params(double kappa, double k_T, double beta, double smallness_threshold = 0.1);

// Pointwise check of s*M0~(s) against the published closed form
// s (1 + alpha s^2)^(-h) (1 - s^2)^h under b = 1, R0^2 = 1/kappa,
// alpha = kappa Wi / 2. Returns the max discrepancy over the grid.
double marginal_equivalence_check(double kappa, double alpha, std::span<const double> s_grid);

struct WeightTableRow {
    double s, fene, corrected, eps;
};

// Sampled columns (s, M, M0, M_eps) for export.
std::vector<WeightTableRow> weight_table(double kappa, double gamma, double epsilon, int n_points);

} // namespace fenelab::weights
