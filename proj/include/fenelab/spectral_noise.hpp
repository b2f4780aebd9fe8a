#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fenelab/geometry.hpp"

// Synthetic turbulent velocity modes on the 2-torus: a Fourier shell
// N <= |k| <= 2N of divergence-free cosine/sine modes with amplitudes
// theta_k = a_tau / |k|^2, white in time. The module also carries the
// Ito corrector matrix A^N(r), its N->infinity limit A(r), and the
// x-diffusion coefficient alpha_N.

namespace fenelab::noise {

struct PhysParams {
    double kappa;  // spring constant
    double beta;   // polymer relaxation time
    double lambda; // turbulence intensity
    double tau;    // dominant flow time-scale

    PhysParams(double kappa_, double beta_, double lambda_, double tau_)
        : kappa(kappa_), beta(beta_), lambda(lambda_), tau(tau_) {
        if (kappa <= 0.0 || beta <= 0.0 || lambda < 0.0 || tau <= 0.0)
            throw std::invalid_argument("PhysParams: kappa, beta, tau must be positive, lambda >= 0");
    }

    double a_tau() const { return std::sqrt(lambda / tau * 8.0 / (std::numbers::pi * std::log(2.0))); }
    double k_T() const { return lambda / tau; }
    double gamma() const { return 0.5 * k_T() * beta; }
    double zeta() const { return beta / tau; }
    // alpha = zeta*lambda/2; equals gamma identically since both reduce to lambda*beta/(2 tau).
    double alpha() const { return 0.5 * zeta() * lambda; }
};

enum class Parity : std::uint8_t { Cos, Sin };

struct Mode {
    int k1;
    int k2;
    Parity parity;
};

// One K+ mode together with its sin partner at -k. Coefficients are stored
// for a_tau = 1: c = k_perp / |k|^3, so sigma_k = a_tau * c * cos/sin(k.x).
struct PairedMode {
    int k1, k2;
    double c1, c2;
    std::size_t idx_cos; // index of k in the ModeSet enumeration
    std::size_t idx_sin; // index of -k
};

class ModeSet {
  public:
    static ModeSet build(int shell_index);

    int shell_index() const { return shell_index_; }
    const std::vector<Mode>& modes() const { return modes_; }
    std::size_t size() const { return modes_.size(); }

    // K+ modes sorted lexicographically by (k1, k2); backbone of the closed-form
    // lattice sums and of the ensemble kernel.
    const std::vector<PairedMode>& paired() const { return paired_; }

    // sum over K++ of theta_k^2 at a_tau = 1
    double unit_theta2_plusplus() const { return unit_theta2_plusplus_; }

    // Covariance of vec(W), W = sum_{k in K+} theta_k (k_perp x k / |k|) xi_k,
    // xi_k iid N(0,1), at a_tau = 1. Row-major 4x4; rank 3 (every term is traceless).
    const std::array<double, 16>& stretch_covariance() const { return stretch_cov_; }

  private:
    int shell_index_ = 0;
    std::vector<Mode> modes_;
    std::vector<PairedMode> paired_;
    double unit_theta2_plusplus_ = 0.0;
    std::array<double, 16> stretch_cov_{};
};

// theta_k^{N,tau}: a_tau/|k|^2 inside the shell, 0 outside. k = 0 is rejected.
double coefficient(int k1, int k2, const PhysParams& p, int shell_index);

// sigma_k(x) for every mode, in enumeration order.
std::vector<Vec2> sigma_eval(const ModeSet& m, const PhysParams& p, Vec2 x);

// (grad_x sigma_k(x)) r for every mode. Requires |r| < 1.
std::vector<Vec2> grad_sigma_apply(const ModeSet& m, const PhysParams& p, Vec2 x, Vec2 r);

// Closed-form Ito corrector A^N(r) = sum_{K+} theta_k^2 (k.r)^2 (k_perp x k_perp)/|k|^2.
Mat2 corrector_matrix(const ModeSet& m, const PhysParams& p, Vec2 r);

// Limit matrix A(r) = k_T (3|r|^2 I - 2 r x r).
Mat2 limit_matrix(Vec2 r, double k_T);

// alpha_N = 1/2 sum_{K++} theta_k^2
double x_diffusion_coefficient(const ModeSet& m, const PhysParams& p);

} // namespace fenelab::noise
