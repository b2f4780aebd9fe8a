#include "fenelab/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace fenelab::fpe {

namespace {

// Thomas solve of the tridiagonal system (lower, diag, upper) x = rhs.
void tridiag_solve(std::span<const double> lower, std::span<const double> diag,
                   std::span<const double> upper, std::span<double> rhs) {
    const std::size_t n = diag.size();
    std::vector<double> cp(n);
    double piv = diag[0];
    if (piv == 0.0 || !std::isfinite(piv)) throw numerical_breakdown("tridiagonal solve: zero pivot");
    cp[0] = upper[0] / piv;
    rhs[0] /= piv;
    for (std::size_t i = 1; i < n; ++i) {
        piv = diag[i] - lower[i] * cp[i - 1];
        if (piv == 0.0 || !std::isfinite(piv))
            throw numerical_breakdown("tridiagonal solve: zero pivot at row " + std::to_string(i));
        cp[i] = upper[i] / piv;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / piv;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= cp[i] * rhs[i + 1];
}

struct SteppingMatrix {
    std::vector<double> lower, diag, upper;
};

// I - theta*dt*L in the cell-average variables.
SteppingMatrix stepping_matrix(const RadialOperator& op, double theta_dt) {
    const int n = op.grid.n_cells;
    SteppingMatrix sm;
    sm.lower.assign(n, 0.0);
    sm.diag.assign(n, 1.0);
    sm.upper.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
        const double scale = theta_dt * op.prefactor / op.grid.volumes[j];
        const double cl = j > 0 ? op.face_conduct[j] : 0.0;
        const double cr = j < n - 1 ? op.face_conduct[j + 1] : 0.0;
        sm.diag[j] += scale * (cl + cr) / op.m0_center[j];
        if (j > 0) sm.lower[j] = -scale * cl / op.m0_center[j - 1];
        if (j < n - 1) sm.upper[j] = -scale * cr / op.m0_center[j + 1];
    }
    return sm;
}

} // namespace

RadialGrid RadialGrid::build(int n_cells, double grading) {
    if (n_cells < 2) throw std::invalid_argument("RadialGrid: need at least 2 cells");
    if (grading < 1.0) throw std::invalid_argument("RadialGrid: grading exponent must be >= 1");
    RadialGrid g;
    g.n_cells = n_cells;
    g.grading = grading;
    g.faces.resize(n_cells + 1);
    for (int j = 0; j <= n_cells; ++j) {
        const double t = 1.0 - static_cast<double>(j) / n_cells;
        g.faces[j] = 1.0 - std::pow(t, grading);
    }
    g.faces.front() = 0.0;
    g.faces.back() = 1.0;
    g.centers.resize(n_cells);
    g.volumes.resize(n_cells);
    for (int j = 0; j < n_cells; ++j) {
        g.centers[j] = 0.5 * (g.faces[j] + g.faces[j + 1]);
        g.volumes[j] = std::numbers::pi * (g.faces[j + 1] * g.faces[j + 1] - g.faces[j] * g.faces[j]);
    }
    return g;
}

RadialGrid build_radial_grid(int n_cells, double grading) { return RadialGrid::build(n_cells, grading); }

std::span<double> RadialDensity::slice(std::size_t i) {
    return {values.data() + i * grid.n_cells, static_cast<std::size_t>(grid.n_cells)};
}
std::span<const double> RadialDensity::slice(std::size_t i) const {
    return {values.data() + i * grid.n_cells, static_cast<std::size_t>(grid.n_cells)};
}

double RadialDensity::slice_mass(std::size_t i) const {
    const auto f = slice(i);
    double m = 0.0;
    for (int j = 0; j < grid.n_cells; ++j) m += f[j] * grid.volumes[j];
    return m;
}

void RadialOperator::apply(std::span<const double> f, std::span<double> out) const {
    const int n = grid.n_cells;
    double flux_left = 0.0; // no flux at s = 0 (symmetry)
    for (int j = 0; j < n; ++j) {
        double flux_right = 0.0; // no flux at s = 1 (vanishing weight)
        if (j < n - 1)
            flux_right = face_conduct[j + 1] *
                         (f[j + 1] / m0_center[j + 1] - f[j] / m0_center[j]);
        out[j] = prefactor * (flux_right - flux_left) / grid.volumes[j];
        flux_left = flux_right;
    }
}

RadialOperator assemble_radial_operator(const RadialGrid& g, double kappa, double alpha,
                                        double zeta_tau) {
    if (kappa <= 0.0 || alpha < 0.0 || zeta_tau <= 0.0)
        throw std::invalid_argument("assemble_radial_operator: bad parameters");
    RadialOperator op;
    op.grid = g;
    op.kappa = kappa;
    op.alpha = alpha;
    op.prefactor = 1.0 / zeta_tau;
    op.validated_regime = kappa / (2.0 * (1.0 + alpha)) > 1.0;

    const int n = g.n_cells;
    op.m0_center.resize(n);
    double mass = 0.0;
    for (int j = 0; j < n; ++j) {
        op.m0_center[j] = weights::corrected_weight(g.centers[j], kappa, alpha);
        mass += op.m0_center[j] * g.volumes[j];
    }
    for (auto& v : op.m0_center) v /= mass;

    op.face_conduct.assign(n + 1, 0.0);
    op.face_plain.assign(n + 1, 0.0);
    for (int i = 1; i < n; ++i) {
        const double s = g.faces[i];
        const double m0f = weights::corrected_weight(s, kappa, alpha) / mass;
        const double dc = g.centers[i] - g.centers[i - 1];
        op.face_conduct[i] = two_pi * s * m0f * (1.0 + alpha * s * s) / dc;
        op.face_plain[i] = two_pi * s * m0f / dc;
    }
    return op;
}

RadialDensity steady_state(const RadialOperator& op) {
    RadialDensity d;
    d.grid = op.grid;
    d.n_slices = 1;
    d.values = op.m0_center; // already unit discrete mass
    return d;
}

double weighted_norm(const RadialDensity& f, const RadialOperator& op, NormKind kind) {
    if (f.grid.n_cells != op.grid.n_cells)
        throw std::invalid_argument("weighted_norm: mismatched grid");
    const int n = f.grid.n_cells;
    const double wx = 1.0 / static_cast<double>(f.n_slices);
    double acc = 0.0;
    for (std::size_t s = 0; s < f.n_slices; ++s) {
        const auto fs = f.slice(s);
        if (kind == NormKind::H0) {
            for (int j = 0; j < n; ++j) acc += fs[j] * fs[j] / op.m0_center[j] * f.grid.volumes[j];
        } else {
            for (int i = 1; i < n; ++i) {
                const double dg = fs[i] / op.m0_center[i] - fs[i - 1] / op.m0_center[i - 1];
                acc += op.face_plain[i] * dg * dg;
            }
        }
    }
    return std::sqrt(wx * acc);
}

double weighted_norm(const RadialDensity& f, const weights::WeightSpec& w, NormKind kind) {
    // Discrete-normalized table of the weight on this grid, so the stationary
    // profile has quotient exactly one.
    RadialOperator tbl;
    tbl.grid = f.grid;
    const int n = f.grid.n_cells;
    tbl.m0_center.resize(n);
    double mass = 0.0;
    for (int j = 0; j < n; ++j) {
        tbl.m0_center[j] = w(f.grid.centers[j]);
        mass += tbl.m0_center[j] * f.grid.volumes[j];
    }
    for (auto& v : tbl.m0_center) v /= mass;
    tbl.face_plain.assign(n + 1, 0.0);
    for (int i = 1; i < n; ++i) {
        const double dc = f.grid.centers[i] - f.grid.centers[i - 1];
        tbl.face_plain[i] = two_pi * f.grid.faces[i] * (w(f.grid.faces[i]) / mass) / dc;
    }
    return weighted_norm(f, tbl, kind);
}

double h0_distance(const RadialDensity& a, const RadialDensity& b, const RadialOperator& op) {
    if (a.n_slices != b.n_slices || a.grid.n_cells != b.grid.n_cells)
        throw std::invalid_argument("h0_distance: incompatible densities");
    RadialDensity diff = a;
    for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= b.values[i];
    return weighted_norm(diff, op, NormKind::H0);
}

namespace {

// H0 distance of f to the stationary state carrying the same per-slice mass.
double distance_to_equilibrium(const RadialDensity& f, const RadialOperator& op) {
    const int n = f.grid.n_cells;
    const double wx = 1.0 / static_cast<double>(f.n_slices);
    double acc = 0.0;
    for (std::size_t s = 0; s < f.n_slices; ++s) {
        const auto fs = f.slice(s);
        const double mass = f.slice_mass(s);
        for (int j = 0; j < n; ++j) {
            const double d = fs[j] - mass * op.m0_center[j];
            acc += d * d / op.m0_center[j] * f.grid.volumes[j];
        }
    }
    return std::sqrt(wx * acc);
}

} // namespace

EvolveResult evolve(const RadialDensity& f0, const RadialOperator& op, double dt, double t_end,
                    Scheme scheme, std::size_t output_every) {
    if (f0.grid.n_cells != op.grid.n_cells) throw std::invalid_argument("evolve: mismatched grid");
    if (dt <= 0.0 || t_end <= 0.0) throw std::invalid_argument("evolve: dt and t_end must be positive");
    for (double v : f0.values)
        if (v < 0.0 || !std::isfinite(v)) throw std::invalid_argument("evolve: f0 must be nonnegative and finite");

    const std::size_t steps = static_cast<std::size_t>(std::llround(t_end / dt));
    if (output_every == 0) output_every = std::max<std::size_t>(1, steps / 50);
    const int n = op.grid.n_cells;

    const SteppingMatrix implicit_m =
        stepping_matrix(op, scheme == Scheme::ImplicitEuler ? dt : 0.5 * dt);

    EvolveResult res;
    res.density = f0;
    auto record = [&](double t) {
        TrajectoryPoint pt;
        pt.t = t;
        pt.h0_distance = distance_to_equilibrium(res.density, op);
        pt.slice_mass.resize(res.density.n_slices);
        for (std::size_t s = 0; s < res.density.n_slices; ++s) pt.slice_mass[s] = res.density.slice_mass(s);
        res.trace.push_back(std::move(pt));
    };
    record(0.0);

    std::vector<double> rhs(n), lf(n);
    for (std::size_t step = 0; step < steps; ++step) {
        for (std::size_t s = 0; s < res.density.n_slices; ++s) {
            auto fs = res.density.slice(s);
            if (scheme == Scheme::CrankNicolson) {
                op.apply(fs, lf);
                for (int j = 0; j < n; ++j) rhs[j] = fs[j] + 0.5 * dt * lf[j];
            } else {
                std::copy(fs.begin(), fs.end(), rhs.begin());
            }
            tridiag_solve(implicit_m.lower, implicit_m.diag, implicit_m.upper, rhs);
            std::copy(rhs.begin(), rhs.end(), fs.begin());
        }
        if ((step + 1) % output_every == 0 || step + 1 == steps) record((step + 1) * dt);
    }
    return res;
}

double spectral_gap(const RadialOperator& op) {
    const int n = op.grid.n_cells;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
    std::vector<double> d(n);
    for (int j = 0; j < n; ++j) d[j] = std::sqrt(op.m0_center[j] * op.grid.volumes[j]);
    for (int i = 1; i < n; ++i) {
        const double c = op.face_conduct[i];
        B(i - 1, i - 1) += c / (d[i - 1] * d[i - 1]);
        B(i, i) += c / (d[i] * d[i]);
        B(i - 1, i) -= c / (d[i - 1] * d[i]);
        B(i, i - 1) -= c / (d[i - 1] * d[i]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
    if (es.info() != Eigen::Success) throw numerical_breakdown("spectral_gap: eigensolver failed");
    // first eigenvalue is the kernel (constant quotient); the next one is the gap
    return es.eigenvalues()(1);
}

SweepResult singular_limit_sweep(std::span<const double> tau_list, double zeta,
                                 const RadialDensity& f0, double kappa, double alpha,
                                 double t_end, std::size_t n_steps) {
    if (tau_list.empty()) throw std::invalid_argument("singular_limit_sweep: empty tau list");
    SweepResult out;
    out.mass_identity_ok = true;
    out.max_mass_drift = 0.0;

    std::vector<double> mass0(f0.n_slices);
    for (std::size_t s = 0; s < f0.n_slices; ++s) mass0[s] = f0.slice_mass(s);

    for (double tau : tau_list) {
        SweepRow row{tau, 0.0, true};
        try {
            if (tau <= 0.0) throw std::invalid_argument("tau must be positive");
            const RadialOperator op =
                assemble_radial_operator(f0.grid, kappa, alpha, zeta * tau);

            // geometric step schedule resolving the O(zeta*tau) transient
            const double dt0 = zeta * tau * 1e-3;
            const double dt_max = t_end / static_cast<double>(n_steps);
            RadialDensity f = f0;
            double t = 0.0;
            double prev_d2 = 0.0;
            {
                const double d = distance_to_equilibrium(f, op);
                prev_d2 = d * d;
            }
            double dt = std::min(dt0, dt_max);
            const int n = op.grid.n_cells;
            std::vector<double> rhs(n);
            while (t < t_end - 1e-14) {
                dt = std::min(dt, t_end - t);
                const SteppingMatrix sm = stepping_matrix(op, dt);
                for (std::size_t s = 0; s < f.n_slices; ++s) {
                    auto fs = f.slice(s);
                    std::copy(fs.begin(), fs.end(), rhs.begin());
                    tridiag_solve(sm.lower, sm.diag, sm.upper, rhs);
                    std::copy(rhs.begin(), rhs.end(), fs.begin());
                }
                t += dt;
                const double d = distance_to_equilibrium(f, op);
                row.integral_distance += 0.5 * (prev_d2 + d * d) * dt;
                prev_d2 = d * d;
                for (std::size_t s = 0; s < f.n_slices; ++s) {
                    const double drift =
                        std::abs(f.slice_mass(s) - mass0[s]) / std::max(std::abs(mass0[s]), 1e-300);
                    out.max_mass_drift = std::max(out.max_mass_drift, drift);
                }
                dt = std::min(dt * 1.05, dt_max);
            }
        } catch (const std::exception&) {
            row.ok = false;
        }
        out.rows.push_back(row);
    }
    out.mass_identity_ok = out.max_mass_drift <= 1e-12;

    std::vector<double> xs, ys;
    for (const auto& row : out.rows)
        if (row.ok && row.integral_distance > 0.0) {
            xs.push_back(row.tau);
            ys.push_back(row.integral_distance);
        }
    out.fitted_slope = xs.size() >= 2 ? loglog_slope(xs, ys) : std::numeric_limits<double>::quiet_NaN();
    return out;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("loglog_slope: need two samples");
    const std::size_t n = x.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace fenelab::fpe
