#include "fenelab/fene_sde.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include <omp.h>
#include <Eigen/Dense>

#include "fenelab/counter_rng.hpp"
#include "fenelab/weights.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace fenelab::sde {

namespace {

// RNG channel map. Draws are pure functions of (seed, particle, step, channel).
constexpr std::uint32_t CH_INIT_POS = 0;
constexpr std::uint32_t CH_INIT_R = 1;
constexpr std::uint32_t CH_THERMAL = 2;
constexpr std::uint32_t CH_EFF_U = 3;
constexpr std::uint32_t CH_EFF_W0 = 4;
constexpr std::uint32_t CH_EFF_W1 = 5;
constexpr std::uint32_t CH_FLOW_BASE = 8;          // + cos-mode enumeration index
constexpr std::uint32_t FLOW_STREAM = 0xFFFFFFFFu; // particle id of the shared flow stream

constexpr std::size_t kBlock = 128;

struct Complex {
    double re, im;
};

inline Complex cmul(Complex a, Complex b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }

inline Complex cpow_int(Complex a, int n) {
    if (n < 0) {
        a.im = -a.im; // unit modulus: inverse = conjugate
        n = -n;
    }
    Complex out{1.0, 0.0};
    while (n > 0) {
        if (n & 1) out = cmul(out, a);
        a = cmul(a, a);
        n >>= 1;
    }
    return out;
}

// K+ mode table in lexicographic (k1, k2) order, pre-scaled by a_tau, plus the
// contiguous k2 runs per k1 row for incremental phase evaluation.
struct KernelModes {
    std::vector<double> c1, c2;                 // sigma coefficient a*theta*kperp/|k|
    std::vector<double> b11, b12, b21, b22;     // stretch coefficient c x k
    std::vector<std::size_t> cos_index;         // enumeration index (RNG channel binding)
    struct Run {
        int k1, k2_begin, count;
        std::size_t base;
    };
    std::vector<Run> runs;

    KernelModes(const noise::ModeSet& m, const noise::PhysParams& p) {
        const double a = p.a_tau();
        const auto& pm = m.paired();
        const std::size_t n = pm.size();
        c1.resize(n); c2.resize(n);
        b11.resize(n); b12.resize(n); b21.resize(n); b22.resize(n);
        cos_index.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            c1[j] = a * pm[j].c1;
            c2[j] = a * pm[j].c2;
            b11[j] = c1[j] * pm[j].k1;
            b12[j] = c1[j] * pm[j].k2;
            b21[j] = c2[j] * pm[j].k1;
            b22[j] = c2[j] * pm[j].k2;
            cos_index[j] = pm[j].idx_cos;
        }
        std::size_t j = 0;
        while (j < n) {
            Run run{pm[j].k1, pm[j].k2, 1, j};
            std::size_t i = j + 1;
            while (i < n && pm[i].k1 == run.k1 && pm[i].k2 == pm[i - 1].k2 + 1) {
                ++run.count;
                ++i;
            }
            runs.push_back(run);
            j = i;
        }
    }
};

// Per-thread scratch for one particle block.
struct BlockWork {
    alignas(64) double x1[kBlock], x2[kBlock];
    alignas(64) double r1[kBlock], r2[kBlock];
    alignas(64) double e1re[kBlock], e1im[kBlock], e2re[kBlock], e2im[kBlock];
    alignas(64) double rowre[kBlock], rowim[kBlock];
    alignas(64) double phre[kBlock], phim[kBlock];
    alignas(64) double u1[kBlock], u2[kBlock];
    alignas(64) double w11[kBlock], w12[kBlock], w21[kBlock], w22[kBlock];
};

// One pass over K+ accumulating the transport increment u = sum sigma_k dW_k
// and (optionally) the stretching matrix W = sum (grad sigma_k) dW_k at the
// block's current positions. Phases advance by one complex multiply per mode.
template <bool WithStretch>
void flow_sweep(const KernelModes& km, std::span<const double> dwp, std::span<const double> dwm,
                BlockWork& wk, int nb) {
    for (int p = 0; p < nb; ++p) {
        wk.u1[p] = 0.0; wk.u2[p] = 0.0;
        if constexpr (WithStretch) {
            wk.w11[p] = 0.0; wk.w12[p] = 0.0; wk.w21[p] = 0.0; wk.w22[p] = 0.0;
        }
        wk.rowre[p] = 1.0; wk.rowim[p] = 0.0;
    }
    int row_k1 = 0;
    for (const auto& run : km.runs) {
        while (row_k1 < run.k1) {
            for (int p = 0; p < nb; ++p) {
                const double re = wk.rowre[p] * wk.e1re[p] - wk.rowim[p] * wk.e1im[p];
                const double im = wk.rowre[p] * wk.e1im[p] + wk.rowim[p] * wk.e1re[p];
                wk.rowre[p] = re;
                wk.rowim[p] = im;
            }
            ++row_k1;
        }
        for (int p = 0; p < nb; ++p) {
            const Complex st = cpow_int({wk.e2re[p], wk.e2im[p]}, run.k2_begin);
            wk.phre[p] = wk.rowre[p] * st.re - wk.rowim[p] * st.im;
            wk.phim[p] = wk.rowre[p] * st.im + wk.rowim[p] * st.re;
        }
        for (int j = 0; j < run.count; ++j) {
            const std::size_t k = run.base + j;
            const double dp = dwp[k], dm = dwm[k];
            const double cc1 = km.c1[k], cc2 = km.c2[k];
            const double bb11 = km.b11[k], bb12 = km.b12[k], bb21 = km.b21[k], bb22 = km.b22[k];
            for (int p = 0; p < nb; ++p) {
                const double pr = wk.phre[p], pi = wk.phim[p];
                const double tu = pr * dp + pi * dm; // cos * dW+ + sin * dW-
                wk.u1[p] += cc1 * tu;
                wk.u2[p] += cc2 * tu;
                if constexpr (WithStretch) {
                    const double xi = pr * dm - pi * dp; // -sin * dW+ + cos * dW-
                    wk.w11[p] += bb11 * xi;
                    wk.w12[p] += bb12 * xi;
                    wk.w21[p] += bb21 * xi;
                    wk.w22[p] += bb22 * xi;
                }
                wk.phre[p] = pr * wk.e2re[p] - pi * wk.e2im[p];
                wk.phim[p] = pr * wk.e2im[p] + pi * wk.e2re[p];
            }
        }
    }
}

inline void block_phases(BlockWork& wk, int nb) {
    for (int p = 0; p < nb; ++p) {
        wk.e1re[p] = std::cos(wk.x1[p]);
        wk.e1im[p] = std::sin(wk.x1[p]);
        wk.e2re[p] = std::cos(wk.x2[p]);
        wk.e2im[p] = std::sin(wk.x2[p]);
    }
}

double spring_root_fast(double a, double c) {
    // Newton on f(b) = b (1 - b^2 + c) - a (1 - b^2), increasing root in [0,1).
    double b = std::min(a / (1.0 + c), 0.999);
    for (int it = 0; it < 50; ++it) {
        const double f = b * (1.0 - b * b + c) - a * (1.0 - b * b);
        const double fp = 1.0 + c - 3.0 * b * b + 2.0 * a * b;
        double step = f / fp;
        double bn = b - step;
        if (bn < 0.0) bn = 0.5 * b;
        if (bn >= 1.0) bn = 0.5 * (b + 1.0);
        if (std::abs(bn - b) < 1e-15) { b = bn; break; }
        b = bn;
    }
    return b;
}

// Radial inverse-CDF sampler for laws p(s) ~ s * w(s) on [0,1].
struct RadialSampler {
    std::vector<double> s, cdf;

    template <class W>
    explicit RadialSampler(const W& w, int n = 8193) {
        s.resize(n);
        cdf.resize(n);
        std::vector<double> pdf(n);
        for (int i = 0; i < n; ++i) {
            s[i] = static_cast<double>(i) / (n - 1);
            pdf[i] = s[i] * w(s[i]);
        }
        cdf[0] = 0.0;
        for (int i = 1; i < n; ++i) cdf[i] = cdf[i - 1] + 0.5 * (pdf[i] + pdf[i - 1]) * (s[i] - s[i - 1]);
        const double total = cdf.back();
        for (auto& v : cdf) v /= total;
    }

    double invert(double u) const {
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.begin()) return 0.0;
        const std::size_t i = static_cast<std::size_t>(it - cdf.begin());
        if (i >= cdf.size()) return s.back();
        const double c0 = cdf[i - 1], c1 = cdf[i];
        const double t = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
        return s[i - 1] + t * (s[i] - s[i - 1]);
    }
};

ParticleState init_particle(std::uint32_t pid, std::uint64_t seed, InitLaw law,
                            const RadialSampler* sampler) {
    ParticleState st;
    const auto ux = rng::uniform_pair({pid, 0, CH_INIT_POS, 0}, seed);
    st.x = {ux.u0 * two_pi, ux.u1 * two_pi};
    if (law == InitLaw::Origin) {
        st.r = {0.0, 0.0};
    } else {
        const auto ur = rng::uniform_pair({pid, 0, CH_INIT_R, 0}, seed);
        const double rad = sampler->invert(ur.u0);
        const double ang = ur.u1 * two_pi;
        st.r = {rad * std::cos(ang), rad * std::sin(ang)};
    }
    return st;
}

struct StretchFactor {
    // vec(W) = sqrt(dt) * F z, z iid standard normals. F is 4 x rank.
    double f[4][3] = {};
    int rank = 0;
};

StretchFactor stretch_factor(const noise::ModeSet& m, const noise::PhysParams& p) {
    const auto& cov = m.stretch_covariance();
    Eigen::Matrix4d T;
    const double a2 = p.a_tau() * p.a_tau();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) T(i, j) = a2 * cov[4 * i + j];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(T);
    StretchFactor out;
    const double lmax = es.eigenvalues().maxCoeff();
    for (int k = 3; k >= 0 && out.rank < 3; --k) { // eigenvalues ascend; take the top ones
        const double lam = es.eigenvalues()(k);
        if (lam > 1e-13 * std::max(lmax, 1e-300)) {
            const double sq = std::sqrt(lam);
            for (int i = 0; i < 4; ++i) out.f[i][out.rank] = sq * es.eigenvectors()(i, k);
            ++out.rank;
        }
    }
    return out;
}

} // namespace

double implicit_spring_root(double a, double c) {
    if (a < 0.0 || c < 0.0) throw std::invalid_argument("implicit_spring_root: a, c must be >= 0");
    if (c == 0.0) {
        if (a >= 1.0) throw unsolvable_step("implicit_spring_root: c = 0 with a >= 1");
        return a;
    }
    if (a == 0.0) return 0.0;
    double b = spring_root_fast(a, c);
    // polish with bisection if Newton left a residual
    auto residual = [&](double v) { return v * (1.0 + c / (1.0 - v * v)) - a; };
    if (std::abs(residual(b)) > 1e-12) {
        double lo = 0.0, hi = 1.0 - 1e-16;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (residual(mid) < 0.0) lo = mid; else hi = mid;
        }
        b = 0.5 * (lo + hi);
    }
    return b;
}

ParticleState step_particle(const ParticleState& st, const noise::PhysParams& p,
                            const noise::ModeSet& m, double dt,
                            std::span<const double> flow_increments, Vec2 thermal_increment) {
    if (st.r.norm2() >= 1.0) throw std::domain_error("step_particle: |r| must be < 1");
    if (flow_increments.size() != m.size())
        throw std::invalid_argument("step_particle: one flow increment per mode required");

    // (1) transport with Stratonovich midpoint
    Vec2 u0{};
    {
        const auto sig = noise::sigma_eval(m, p, st.x);
        for (std::size_t i = 0; i < sig.size(); ++i) u0 += sig[i] * flow_increments[i];
    }
    const Vec2 xhat = st.x + 0.5 * u0;
    Vec2 ustar{};
    {
        const auto sig = noise::sigma_eval(m, p, xhat);
        for (std::size_t i = 0; i < sig.size(); ++i) ustar += sig[i] * flow_increments[i];
    }

    // (2) Stratonovich stretch, Heun in r at the pre-step position. The
    // stretch fields are linear in r, so the midpoint update is exactly
    // (I + W + W^2/2) r with W = sum dW_k grad sigma_k(x).
    Mat2 W{};
    {
        const double a = p.a_tau();
        for (std::size_t i = 0; i < m.size(); ++i) {
            const auto& md = m.modes()[i];
            const double n2 = static_cast<double>(md.k1) * md.k1 + static_cast<double>(md.k2) * md.k2;
            const double phase = md.k1 * st.x.x + md.k2 * st.x.y;
            const double trig = md.parity == noise::Parity::Cos ? -std::sin(phase) : std::cos(phase);
            const double s = a / n2 / std::sqrt(n2) * trig * flow_increments[i];
            W += Mat2{-md.k2 * static_cast<double>(md.k1) * s, -md.k2 * static_cast<double>(md.k2) * s,
                      md.k1 * static_cast<double>(md.k1) * s, md.k1 * static_cast<double>(md.k2) * s};
        }
    }
    const Vec2 wr = W.apply(st.r);
    Vec2 r_mid = st.r + wr + 0.5 * W.apply(wr);

    // (3) thermal kick, (4) implicit spring
    r_mid += std::sqrt(2.0 / p.beta) * thermal_increment;
    const double mag = r_mid.norm();
    const double b = implicit_spring_root(mag, dt * p.kappa / p.beta);

    ParticleState out;
    out.x = wrap_torus(st.x + ustar);
    out.r = mag > 0.0 ? r_mid * (b / mag) : Vec2{0.0, 0.0};
    return out;
}

EnsembleResult simulate_ensemble(const EnsembleConfig& cfg, const noise::PhysParams& p,
                                 const noise::ModeSet& m) {
    if (cfg.n_particles == 0 || cfg.dt <= 0.0 || cfg.t_end <= 0.0)
        throw std::invalid_argument("simulate_ensemble: invalid configuration");

    const std::size_t n = cfg.n_particles;
    const std::uint64_t steps = static_cast<std::uint64_t>(std::llround(cfg.t_end / cfg.dt));
    const double dt = cfg.dt;
    const double sqdt = std::sqrt(dt);
    const double thermal_scale = std::sqrt(2.0 * dt / p.beta);
    const double spring_c = dt * p.kappa / p.beta;
    const std::size_t output_every =
        cfg.output_every > 0 ? cfg.output_every : std::max<std::size_t>(1, steps / 50);

    std::unique_ptr<RadialSampler> sampler;
    if (cfg.init == InitLaw::Thermal)
        sampler = std::make_unique<RadialSampler>(
            [&](double s) { return weights::fene_weight(s, p.kappa); });
    else if (cfg.init == InitLaw::Corrected)
        sampler = std::make_unique<RadialSampler>(
            [&](double s) { return weights::corrected_weight(s, p.kappa, p.gamma()); });

    EnsembleResult res;
    res.initial_states.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        res.initial_states[i] = init_particle(static_cast<std::uint32_t>(i), cfg.seed, cfg.init, sampler.get());
    res.final_states = res.initial_states;

    const std::size_t n_blocks = (n + kBlock - 1) / kBlock;
    const std::size_t n_out = steps / output_every + 1;
    std::vector<double> part_sq(n_blocks * n_out, 0.0);
    std::vector<double> part_str(n_blocks * n_out, 0.0);
    std::vector<std::uint64_t> part_viol(n_blocks, 0);
    std::vector<double> part_max(n_blocks, 0.0);

    auto block_stats = [&](std::size_t blk, std::size_t out_idx, const ParticleState* st, std::size_t count) {
        double sq = 0.0, str = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const double s2 = st[i].r.norm2();
            sq += s2;
            if (s2 > 0.81) str += 1.0;
        }
        part_sq[blk * n_out + out_idx] = sq;
        part_str[blk * n_out + out_idx] = str;
    };

    if (cfg.shared_flow) {
        const KernelModes km(m, p);
        const std::size_t n_pairs = m.paired().size();
        std::vector<double> dwp(n_pairs), dwm(n_pairs);
        const int n_threads = omp_get_max_threads();
        std::vector<BlockWork> work(n_threads);

        for (std::uint64_t step = 0; step < steps; ++step) {
            const auto step32 = static_cast<std::uint32_t>(step);
            for (std::size_t j = 0; j < n_pairs; ++j) {
                const auto ch = static_cast<std::uint32_t>(CH_FLOW_BASE + km.cos_index[j]);
                const auto z = rng::normal_pair({FLOW_STREAM, step32, ch, 0}, cfg.seed);
                dwp[j] = sqdt * z.z0;
                dwm[j] = sqdt * z.z1;
            }

#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(n_blocks); ++blk) {
                BlockWork& wk = work[omp_get_thread_num()];
                const std::size_t lo = blk * kBlock;
                const int nb = static_cast<int>(std::min(kBlock, n - lo));
                ParticleState* st = res.final_states.data() + lo;
                for (int q = 0; q < nb; ++q) {
                    wk.x1[q] = st[q].x.x;
                    wk.x2[q] = st[q].x.y;
                    wk.r1[q] = st[q].r.x;
                    wk.r2[q] = st[q].r.y;
                }
                block_phases(wk, nb);
                flow_sweep<true>(km, dwp, dwm, wk, nb);

                // the stretch sweep keeps wk.w* intact; only u is re-evaluated
                // at the transport midpoint
                for (int q = 0; q < nb; ++q) {
                    wk.x1[q] += 0.5 * wk.u1[q];
                    wk.x2[q] += 0.5 * wk.u2[q];
                }
                block_phases(wk, nb);
                flow_sweep<false>(km, dwp, dwm, wk, nb);

                for (int q = 0; q < nb; ++q) {
                    const auto pid = static_cast<std::uint32_t>(lo + q);
                    const auto zt = rng::normal_pair({pid, step32, CH_THERMAL, 0}, cfg.seed);
                    const double rx = wk.r1[q], ry = wk.r2[q];
                    const double wrx = wk.w11[q] * rx + wk.w12[q] * ry;
                    const double wry = wk.w21[q] * rx + wk.w22[q] * ry;
                    double nx = rx + wrx + 0.5 * (wk.w11[q] * wrx + wk.w12[q] * wry) + thermal_scale * zt.z0;
                    double ny = ry + wry + 0.5 * (wk.w21[q] * wrx + wk.w22[q] * wry) + thermal_scale * zt.z1;
                    const double mag = std::sqrt(nx * nx + ny * ny);
                    if (mag > 0.0) {
                        const double b = spring_root_fast(mag, spring_c);
                        nx *= b / mag;
                        ny *= b / mag;
                    }
                    const double s2 = nx * nx + ny * ny;
                    if (s2 >= 1.0) ++part_viol[blk];
                    part_max[blk] = std::max(part_max[blk], std::sqrt(s2));
                    st[q].x = wrap_torus({st[q].x.x + wk.u1[q], st[q].x.y + wk.u2[q]});
                    st[q].r = {nx, ny};
                }
                if ((step + 1) % output_every == 0)
                    block_stats(blk, (step + 1) / output_every, st, nb);
            }
        }
    } else {
        // Independent flow realizations. The only functionals of the per-mode
        // increments entering the step are the transport increment
        // u ~ N(0, 2 alpha_N dt I) and the stretching matrix W whose vec has
        // covariance dt * sum_k theta_k^2 vec(kperp x k / |k|) vec(.)^T; the
        // pair is independent and is sampled directly instead of summing
        // 2|K| per-mode Gaussians per particle.
        const StretchFactor F = stretch_factor(m, p);
        const double u_scale = std::sqrt(2.0 * noise::x_diffusion_coefficient(m, p) * dt);

#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(n_blocks); ++blk) {
            const std::size_t lo = blk * kBlock;
            const std::size_t hi = std::min(lo + kBlock, n);
            for (std::size_t i = lo; i < hi; ++i) {
                const auto pid = static_cast<std::uint32_t>(i);
                ParticleState st = res.initial_states[i];
                for (std::uint64_t step = 0; step < steps; ++step) {
                    const auto step32 = static_cast<std::uint32_t>(step);
                    const auto zu = rng::normal_pair({pid, step32, CH_EFF_U, 0}, cfg.seed);
                    const auto zw0 = rng::normal_pair({pid, step32, CH_EFF_W0, 0}, cfg.seed);
                    const auto zw1 = rng::normal_pair({pid, step32, CH_EFF_W1, 0}, cfg.seed);
                    const auto zt = rng::normal_pair({pid, step32, CH_THERMAL, 0}, cfg.seed);
                    const double z[3] = {zw0.z0, zw0.z1, zw1.z0};
                    double w[4] = {0.0, 0.0, 0.0, 0.0};
                    for (int c = 0; c < F.rank; ++c)
                        for (int a = 0; a < 4; ++a) w[a] += F.f[a][c] * z[c];
                    for (double& v : w) v *= sqdt;

                    const double rx = st.r.x, ry = st.r.y;
                    const double wrx = w[0] * rx + w[1] * ry;
                    const double wry = w[2] * rx + w[3] * ry;
                    double nx = rx + wrx + 0.5 * (w[0] * wrx + w[1] * wry) + thermal_scale * zt.z0;
                    double ny = ry + wry + 0.5 * (w[2] * wrx + w[3] * wry) + thermal_scale * zt.z1;
                    const double mag = std::sqrt(nx * nx + ny * ny);
                    if (mag > 0.0) {
                        const double b = spring_root_fast(mag, spring_c);
                        nx *= b / mag;
                        ny *= b / mag;
                    }
                    const double s2 = nx * nx + ny * ny;
                    if (s2 >= 1.0) ++part_viol[blk];
                    part_max[blk] = std::max(part_max[blk], std::sqrt(s2));
                    st.x = wrap_torus({st.x.x + u_scale * zu.z0, st.x.y + u_scale * zu.z1});
                    st.r = {nx, ny};
                    if ((step + 1) % output_every == 0) {
                        const std::size_t oi = (step + 1) / output_every;
                        part_sq[blk * n_out + oi] += s2;
                        if (s2 > 0.81) part_str[blk * n_out + oi] += 1.0;
                    }
                }
                res.final_states[i] = st;
            }
        }
    }

    // stats at t = 0 and deterministic block-order reduction
    for (std::size_t blk = 0; blk < n_blocks; ++blk) {
        const std::size_t lo = blk * kBlock;
        block_stats(blk, 0, res.initial_states.data() + lo, std::min(kBlock, n - lo));
    }
    res.series.resize(n_out);
    for (std::size_t oi = 0; oi < n_out; ++oi) {
        double sq = 0.0, str = 0.0;
        for (std::size_t blk = 0; blk < n_blocks; ++blk) {
            sq += part_sq[blk * n_out + oi];
            str += part_str[blk * n_out + oi];
        }
        res.series[oi] = {static_cast<double>(oi * output_every) * dt, sq / n, str / n};
    }
    for (std::size_t blk = 0; blk < n_blocks; ++blk) {
        res.boundary_violations += part_viol[blk];
        res.max_abs_r = std::max(res.max_abs_r, part_max[blk]);
    }
    return res;
}

Histogram elongation_histogram(std::span<const ParticleState> states, int n_bins) {
    if (states.empty()) throw std::invalid_argument("elongation_histogram: empty state set");
    if (n_bins < 10) throw std::invalid_argument("elongation_histogram: need at least 10 bins");
    Histogram h;
    h.left.resize(n_bins);
    h.right.resize(n_bins);
    h.counts.assign(n_bins, 0);
    h.density.resize(n_bins);
    h.stderr_.resize(n_bins);
    const double w = 1.0 / n_bins;
    for (int b = 0; b < n_bins; ++b) {
        h.left[b] = b * w;
        h.right[b] = (b + 1) * w;
    }
    for (const auto& st : states) {
        int b = static_cast<int>(st.r.norm() * n_bins);
        b = std::clamp(b, 0, n_bins - 1);
        ++h.counts[b];
    }
    const double n = static_cast<double>(states.size());
    for (int b = 0; b < n_bins; ++b) {
        const double phat = h.counts[b] / n;
        h.density[b] = phat / w;
        h.stderr_[b] = std::sqrt(phat * (1.0 - phat) / n) / w;
    }
    return h;
}

std::vector<double> reference_marginal(double kappa, double gamma, int n_bins) {
    if (kappa <= 0.0 || gamma < 0.0) throw std::invalid_argument("reference_marginal: bad parameters");
    if (n_bins < 1) throw std::invalid_argument("reference_marginal: need at least one bin");
    using GKq = boost::math::quadrature::gauss_kronrod<double, 15>;
    auto f = [&](double s) { return s * weights::corrected_weight(s, kappa, gamma); };
    std::vector<double> mass(n_bins);
    double total = 0.0;
    for (int b = 0; b < n_bins; ++b) {
        const double lo = static_cast<double>(b) / n_bins;
        const double hi = static_cast<double>(b + 1) / n_bins;
        mass[b] = GKq::integrate(f, lo, hi, 12, 1e-12);
        total += mass[b];
    }
    std::vector<double> density(n_bins);
    for (int b = 0; b < n_bins; ++b) density[b] = mass[b] / total * n_bins;
    return density;
}

std::vector<ParticleState> draw_reference_states(std::size_t n, double kappa, double gamma,
                                                 std::uint64_t seed) {
    const RadialSampler sampler([&](double s) { return weights::corrected_weight(s, kappa, gamma); });
    std::vector<ParticleState> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = init_particle(static_cast<std::uint32_t>(i), seed, InitLaw::Corrected, &sampler);
    return out;
}

} // namespace fenelab::sde
