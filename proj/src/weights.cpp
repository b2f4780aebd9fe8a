#include "fenelab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace fenelab::weights {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

void check_radius(double s) {
    if (!(s >= 0.0) || s > 1.0) throw std::domain_error("weight: radius must lie in [0, 1]");
}

double epsilon_integrand(double u, double kappa, double sigma, double epsilon) {
    const double phi = cutoff_profile(u, epsilon);
    return kappa * u / ((1.0 - u * u) * (1.0 + sigma * phi * phi * u * u));
}

// int_0^s of the epsilon-weight integrand, split at the cut-off joints.
double epsilon_exponent(double s, double kappa, double sigma, double epsilon) {
    auto f = [&](double u) { return epsilon_integrand(u, kappa, sigma, epsilon); };
    const double j1 = 1.0 - 2.0 * epsilon;
    const double j2 = 1.0 - epsilon;
    std::vector<double> cuts = {0.0};
    if (j1 > 0.0 && j1 < s) cuts.push_back(j1);
    if (j2 > 0.0 && j2 < s) cuts.push_back(j2);
    cuts.push_back(s);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        total += GK::integrate(f, cuts[i], cuts[i + 1], 12, 1e-12);
    return total;
}

// int_0^1 f(s) ds with dyadic interval refinement toward s = 1, where the
// weights vanish with a fractional power.
double integrate_radial(const std::function<double(double)>& f) {
    double total = GK::integrate(f, 0.0, 0.5, 12, 1e-12);
    double lo = 0.5;
    for (int j = 1; j <= 48; ++j) {
        const double hi = 1.0 - std::ldexp(1.0, -j - 1);
        total += GK::integrate(f, lo, hi, 10, 1e-12);
        lo = hi;
    }
    // remaining width 2^-49; integrand bounded by its value at the inner edge
    return total;
}

} // namespace

double fene_weight(double s, double kappa) {
    check_radius(s);
    if (kappa <= 0.0) throw std::invalid_argument("fene_weight: kappa must be positive");
    return std::pow(1.0 - s * s, 0.5 * kappa);
}

double corrected_weight(double s, double kappa, double gamma) {
    check_radius(s);
    if (kappa <= 0.0) throw std::invalid_argument("corrected_weight: kappa must be positive");
    if (gamma < 0.0) throw std::invalid_argument("corrected_weight: gamma must be >= 0");
    const double expo = 0.5 * kappa / (1.0 + gamma);
    return std::pow((1.0 - s * s) / (1.0 + gamma * s * s), expo);
}

double cutoff_profile(double s, double epsilon) {
    if (!(epsilon > 0.0) || epsilon >= 0.25) throw std::invalid_argument("cutoff_profile: need 0 < eps < 1/4");
    const double d = 1.0 - s;
    if (d >= 2.0 * epsilon) return 1.0;
    if (d <= epsilon) return 0.0;
    const double t = (d - epsilon) / epsilon;
    return t * t * (3.0 - 2.0 * t);
}

double epsilon_weight(double s, double kappa, double sigma, double epsilon) {
    if (s > 1.0 || s < 0.0) throw std::domain_error("epsilon_weight: radius must lie in [0, 1]");
    if (kappa <= 0.0) throw std::invalid_argument("epsilon_weight: kappa must be positive");
    if (sigma < 0.0) throw std::invalid_argument("epsilon_weight: sigma must be >= 0");
    if (s == 1.0) return 0.0;
    return std::exp(-epsilon_exponent(s, kappa, sigma, epsilon));
}

double WeightSpec::operator()(double s) const {
    double v = 0.0;
    switch (kind) {
        case Kind::Fene: v = fene_weight(s, kappa); break;
        case Kind::Corrected: v = corrected_weight(s, kappa, gamma); break;
        case Kind::Epsilon: v = epsilon_weight(s, kappa, gamma, epsilon); break;
    }
    return normalized ? v / Z : v;
}

double disc_normalize(const WeightSpec& w) {
    if (w.kappa <= 0.0) throw std::invalid_argument("disc_normalize: non-integrable weight (kappa <= 0)");
    WeightSpec raw = w;
    raw.normalized = false;
    const double z = 2.0 * std::numbers::pi * integrate_radial([&](double s) { return s * raw(s); });
    if (!(z > 0.0) || !std::isfinite(z)) throw std::invalid_argument("disc_normalize: normalization failed");
    return z;
}

WeightSpec normalized(WeightSpec w) {
    w.Z = disc_normalize(w);
    w.normalized = true;
    return w;
}

RegimeReport coil_stretch_params(double kappa, double k_T, double beta, double smallness_threshold) {
    if (kappa <= 0.0 || k_T < 0.0 || beta <= 0.0)
        throw std::invalid_argument("coil_stretch_params: parameters must be positive");
    RegimeReport rep;
    rep.kT_beta = k_T * beta;
    rep.gamma = 0.5 * rep.kT_beta;
    rep.h = 0.5 * kappa / (1.0 + rep.gamma);
    rep.wi = 2.0 * rep.kT_beta / kappa;
    rep.smallness_threshold = smallness_threshold;
    rep.hardy_ok = rep.h > 1.0;
    rep.smallness_ok = rep.kT_beta <= smallness_threshold;
    rep.cutoff_required = !(rep.hardy_ok && rep.smallness_ok);
    return rep;
}

double marginal_equivalence_check(double kappa, double alpha, std::span<const double> s_grid) {
    const double h = 0.5 * kappa / (1.0 + alpha);
    double worst = 0.0;
    for (double s : s_grid) {
        const double lhs = s * corrected_weight(s, kappa, alpha);
        const double rhs = s * std::pow(1.0 + alpha * s * s, -h) * std::pow(1.0 - s * s, h);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

std::vector<WeightTableRow> weight_table(double kappa, double gamma, double epsilon, int n_points) {
    if (n_points < 2) throw std::invalid_argument("weight_table: need at least 2 points");
    std::vector<WeightTableRow> rows;
    rows.reserve(n_points);
    for (int i = 0; i < n_points; ++i) {
        const double s = static_cast<double>(i) / (n_points - 1);
        rows.push_back({s, fene_weight(s, kappa), corrected_weight(s, kappa, gamma),
                        epsilon_weight(s, kappa, gamma, epsilon)});
    }
    return rows;
}

} // namespace fenelab::weights
