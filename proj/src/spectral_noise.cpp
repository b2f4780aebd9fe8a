#include "fenelab/spectral_noise.hpp"

#include <algorithm>
#include <map>

namespace fenelab::noise {

namespace {

bool in_shell(int k1, int k2, int N) {
    const long n2 = static_cast<long>(k1) * k1 + static_cast<long>(k2) * k2;
    return n2 >= static_cast<long>(N) * N && n2 <= 4l * N * N && n2 > 0;
}

// Quadrant rule: K++ (k1>=0, k2>0) and K+- (k1>0, k2<=0) carry cosines,
// their mirror images K-+ and K-- carry sines.
bool in_plusplus(int k1, int k2) { return k1 >= 0 && k2 > 0; }
bool in_plusminus(int k1, int k2) { return k1 > 0 && k2 <= 0; }

} // namespace

ModeSet ModeSet::build(int shell_index) {
    if (shell_index < 1) throw std::invalid_argument("ModeSet::build: shell index must be >= 1");
    const int N = shell_index;
    const int B = 2 * N;

    ModeSet ms;
    ms.shell_index_ = N;

    std::vector<std::pair<int, int>> plusplus, plusminus;
    for (int k1 = 0; k1 <= B; ++k1)
        for (int k2 = -B; k2 <= B; ++k2) {
            if (!in_shell(k1, k2, N)) continue;
            if (in_plusplus(k1, k2)) plusplus.emplace_back(k1, k2);
            else if (in_plusminus(k1, k2)) plusminus.emplace_back(k1, k2);
        }
    std::sort(plusplus.begin(), plusplus.end());
    std::sort(plusminus.begin(), plusminus.end());

    // Enumeration: K++ then K+- (cos), followed by K-+ then K-- (sin).
    // Each sine block mirrors the cosine block at -k, so k -> -k is the
    // index map idx_sin = idx_cos + |K+| up to the class split.
    std::map<std::pair<int, int>, std::size_t> index_of;
    auto push = [&](int k1, int k2, Parity par) {
        index_of[{k1, k2}] = ms.modes_.size();
        ms.modes_.push_back({k1, k2, par});
    };
    for (auto [k1, k2] : plusplus) push(k1, k2, Parity::Cos);
    for (auto [k1, k2] : plusminus) push(k1, k2, Parity::Cos);
    {
        // K-+ = -(K+-), K-- = -(K++); sort each class lexicographically as well.
        std::vector<std::pair<int, int>> minusplus, minusminus;
        for (auto [k1, k2] : plusminus) minusplus.emplace_back(-k1, -k2);
        for (auto [k1, k2] : plusplus) minusminus.emplace_back(-k1, -k2);
        std::sort(minusplus.begin(), minusplus.end());
        std::sort(minusminus.begin(), minusminus.end());
        for (auto [k1, k2] : minusplus) push(k1, k2, Parity::Sin);
        for (auto [k1, k2] : minusminus) push(k1, k2, Parity::Sin);
    }

    std::vector<std::pair<int, int>> kplus = plusplus;
    kplus.insert(kplus.end(), plusminus.begin(), plusminus.end());
    std::sort(kplus.begin(), kplus.end());

    ms.paired_.reserve(kplus.size());
    for (auto [k1, k2] : kplus) {
        const double n2 = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
        const double n = std::sqrt(n2);
        PairedMode pm;
        pm.k1 = k1;
        pm.k2 = k2;
        pm.c1 = -k2 / (n * n2);
        pm.c2 = k1 / (n * n2);
        pm.idx_cos = index_of.at({k1, k2});
        pm.idx_sin = index_of.at({-k1, -k2});
        ms.paired_.push_back(pm);
    }

    for (auto [k1, k2] : plusplus) {
        const double n2 = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
        ms.unit_theta2_plusplus_ += 1.0 / (n2 * n2);
    }

    // vec(W) covariance at a_tau = 1: sum of vec(B) vec(B)^T, B = c x k.
    for (const auto& pm : ms.paired_) {
        const double b[4] = {pm.c1 * pm.k1, pm.c1 * pm.k2, pm.c2 * pm.k1, pm.c2 * pm.k2};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) ms.stretch_cov_[4 * i + j] += b[i] * b[j];
    }

    return ms;
}

double coefficient(int k1, int k2, const PhysParams& p, int shell_index) {
    if (k1 == 0 && k2 == 0) throw std::invalid_argument("coefficient: k must be nonzero");
    if (shell_index < 1) throw std::invalid_argument("coefficient: shell index must be >= 1");
    if (!in_shell(k1, k2, shell_index)) return 0.0;
    const double n2 = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
    return p.a_tau() / n2;
}

std::vector<Vec2> sigma_eval(const ModeSet& m, const PhysParams& p, Vec2 x) {
    const double a = p.a_tau();
    std::vector<Vec2> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const Mode& md = m.modes()[i];
        const double n2 = static_cast<double>(md.k1) * md.k1 + static_cast<double>(md.k2) * md.k2;
        const double phase = md.k1 * x.x + md.k2 * x.y;
        const double trig = md.parity == Parity::Cos ? std::cos(phase) : std::sin(phase);
        const double scale = a / n2 / std::sqrt(n2) * trig;
        out[i] = {-md.k2 * scale, md.k1 * scale};
    }
    return out;
}

std::vector<Vec2> grad_sigma_apply(const ModeSet& m, const PhysParams& p, Vec2 x, Vec2 r) {
    if (r.norm2() >= 1.0) throw std::domain_error("grad_sigma_apply: |r| must be < 1");
    const double a = p.a_tau();
    std::vector<Vec2> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const Mode& md = m.modes()[i];
        const double n2 = static_cast<double>(md.k1) * md.k1 + static_cast<double>(md.k2) * md.k2;
        const double phase = md.k1 * x.x + md.k2 * x.y;
        const double kr = md.k1 * r.x + md.k2 * r.y;
        const double trig = md.parity == Parity::Cos ? -std::sin(phase) : std::cos(phase);
        const double scale = a / n2 / std::sqrt(n2) * kr * trig;
        out[i] = {-md.k2 * scale, md.k1 * scale};
    }
    return out;
}

Mat2 corrector_matrix(const ModeSet& m, const PhysParams& p, Vec2 r) {
    // cos^2 + sin^2 pairing over K+ u K- removes x; each pair contributes
    // theta^2 (k.r)^2 (k_perp x k_perp)/|k|^2 = (k.r)^2 c x c at a_tau = 1.
    double s11 = 0.0, s12 = 0.0, s22 = 0.0;
    for (const auto& pm : m.paired()) {
        const double kr = pm.k1 * r.x + pm.k2 * r.y;
        const double w = kr * kr;
        s11 += w * pm.c1 * pm.c1;
        s12 += w * pm.c1 * pm.c2;
        s22 += w * pm.c2 * pm.c2;
    }
    const double a2 = p.a_tau() * p.a_tau();
    return {a2 * s11, a2 * s12, a2 * s12, a2 * s22};
}

Mat2 limit_matrix(Vec2 r, double k_T) {
    if (k_T <= 0.0) throw std::invalid_argument("limit_matrix: k_T must be positive");
    const double s2 = r.norm2();
    Mat2 out = Mat2::identity() * (3.0 * s2);
    out += Mat2::outer(r, r) * (-2.0);
    return out * k_T;
}

double x_diffusion_coefficient(const ModeSet& m, const PhysParams& p) {
    const double a2 = p.a_tau() * p.a_tau();
    return 0.5 * a2 * m.unit_theta2_plusplus();
}

} // namespace fenelab::noise
