#include "learnet/rankpool.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace learnet {

namespace {

void check_sequence(const FeatureSequence& seq, size_t min_frames) {
    if (seq.frame_count() < min_frames)
        throw ValueError("sequence has " + std::to_string(seq.frame_count()) +
                         " frames, need at least " + std::to_string(min_frames));
    for (const auto& f : seq.frames)
        if (f.size() != seq.dim)
            throw ShapeError("frame feature dimension " + std::to_string(f.size()) +
                             " does not match sequence dimension " + std::to_string(seq.dim));
}

// Time averages for t = 1..T, each accumulated in 64-bit.
std::vector<std::vector<double>> all_time_averages(const FeatureSequence& seq) {
    const size_t T = seq.frame_count(), D = seq.dim;
    std::vector<std::vector<double>> phi(T, std::vector<double>(D, 0.0));
    std::vector<double> run(D, 0.0);
    for (size_t t = 0; t < T; ++t) {
        for (size_t i = 0; i < D; ++i) run[i] += static_cast<double>(seq.frames[t][i]);
        const double inv = 1.0 / static_cast<double>(t + 1);
        for (size_t i = 0; i < D; ++i) phi[t][i] = run[i] * inv;
    }
    return phi;
}

double objective_of(const std::vector<double>& d,
                    const std::vector<std::vector<double>>& phi, double delta) {
    const size_t T = phi.size();
    double reg = 0.0;
    for (double x : d) reg += x * x;
    reg *= 0.5 * delta;

    std::vector<double> psi(T, 0.0);
    for (size_t t = 0; t < T; ++t) {
        double s = 0.0;
        for (size_t i = 0; i < d.size(); ++i) s += d[i] * phi[t][i];
        psi[t] = s;
    }
    double hinge = 0.0;
    for (size_t t = 0; t < T; ++t)
        for (size_t l = t + 1; l < T; ++l)
            hinge += std::max(0.0, 1.0 - psi[l] + psi[t]);
    const double norm = 2.0 / (static_cast<double>(T) * static_cast<double>(T - 1));
    return reg + norm * hinge;
}

// Subgradient of the objective; pairs sitting exactly on the margin
// contribute zero.
std::vector<double> subgradient_of(const std::vector<double>& d,
                                   const std::vector<std::vector<double>>& phi,
                                   double delta) {
    const size_t T = phi.size(), D = d.size();
    std::vector<double> psi(T, 0.0);
    for (size_t t = 0; t < T; ++t) {
        double s = 0.0;
        for (size_t i = 0; i < D; ++i) s += d[i] * phi[t][i];
        psi[t] = s;
    }
    std::vector<double> g(D, 0.0);
    for (size_t i = 0; i < D; ++i) g[i] = delta * d[i];
    const double norm = 2.0 / (static_cast<double>(T) * static_cast<double>(T - 1));
    for (size_t t = 0; t < T; ++t)
        for (size_t l = t + 1; l < T; ++l) {
            if (1.0 - psi[l] + psi[t] > 0.0)
                for (size_t i = 0; i < D; ++i) g[i] += norm * (phi[t][i] - phi[l][i]);
        }
    return g;
}

}  // namespace

std::vector<float> time_average(const FeatureSequence& seq, size_t t) {
    check_sequence(seq, 1);
    if (t < 1 || t > seq.frame_count())
        throw ValueError("time index " + std::to_string(t) + " is outside [1, " +
                         std::to_string(seq.frame_count()) + "]");
    std::vector<double> acc(seq.dim, 0.0);
    for (size_t k = 0; k < t; ++k)
        for (size_t i = 0; i < seq.dim; ++i) acc[i] += static_cast<double>(seq.frames[k][i]);
    std::vector<float> out(seq.dim);
    const double inv = 1.0 / static_cast<double>(t);
    for (size_t i = 0; i < seq.dim; ++i) out[i] = static_cast<float>(acc[i] * inv);
    return out;
}

double rank_score(const std::vector<float>& d, const std::vector<float>& phi) {
    if (d.size() != phi.size())
        throw ShapeError("rank_score dimension mismatch: " + std::to_string(d.size()) +
                         " vs " + std::to_string(phi.size()));
    double s = 0.0;
    for (size_t i = 0; i < d.size(); ++i)
        s += static_cast<double>(d[i]) * static_cast<double>(phi[i]);
    return s;
}

double rank_objective(const std::vector<float>& d, const FeatureSequence& seq, double delta) {
    check_sequence(seq, 2);
    if (d.size() != seq.dim)
        throw ShapeError("direction dimension " + std::to_string(d.size()) +
                         " does not match feature dimension " + std::to_string(seq.dim));
    std::vector<double> dd(d.begin(), d.end());
    return objective_of(dd, all_time_averages(seq), delta);
}

DynamicMap solve_exact(const FeatureSequence& seq, const RankPoolConfig& cfg) {
    check_sequence(seq, 2);
    for (const auto& f : seq.frames)
        for (float x : f)
            if (!std::isfinite(x)) throw ValueError("non-finite value in frame features");
    if (cfg.step_size <= 0.0) throw ValueError("step_size must be positive");
    if (cfg.tolerance <= 0.0) throw ValueError("tolerance must be positive");
    if (cfg.max_iters < 1) throw ValueError("max_iters must be positive");

    const auto phi = all_time_averages(seq);
    std::vector<double> d(seq.dim, 0.0);
    std::vector<double> best = d;
    double current = objective_of(d, phi, cfg.delta);
    double best_obj = current;

    for (int it = 0; it < cfg.max_iters; ++it) {
        const auto g = subgradient_of(d, phi, cfg.delta);
        for (size_t i = 0; i < d.size(); ++i) d[i] -= cfg.step_size * g[i];
        const double next = objective_of(d, phi, cfg.delta);
        if (next < best_obj) {
            best_obj = next;
            best = d;
        }
        const double improvement = current - next;
        current = next;
        if (improvement >= 0.0 && improvement < cfg.tolerance) break;
    }

    DynamicMap m;
    m.provenance = PoolMode::Exact;
    m.objective = best_obj;
    m.weights.resize(seq.dim);
    for (size_t i = 0; i < seq.dim; ++i) m.weights[i] = static_cast<float>(best[i]);
    return m;
}

std::vector<double> approx_coefficients(size_t frame_count) {
    if (frame_count == 0) throw ValueError("frame count must be at least 1");
    const double T = static_cast<double>(frame_count);
    // Harmonic numbers H_0..H_T.
    std::vector<double> H(frame_count + 1, 0.0);
    for (size_t i = 1; i <= frame_count; ++i) H[i] = H[i - 1] + 1.0 / static_cast<double>(i);
    std::vector<double> alpha(frame_count);
    for (size_t t = 1; t <= frame_count; ++t)
        alpha[t - 1] = 2.0 * (T - static_cast<double>(t) + 1.0) -
                       (T + 1.0) * (H[frame_count] - H[t - 1]);
    return alpha;
}

DynamicMap solve_approximate(const FeatureSequence& seq) {
    check_sequence(seq, 1);
    const auto alpha = approx_coefficients(seq.frame_count());
    const auto phi = all_time_averages(seq);
    // The coefficients sum to zero, so combining (phi_t - phi_1) instead of
    // phi_t is the same map but cancels the summation residue; a constant
    // clip comes out exactly zero.
    std::vector<double> acc(seq.dim, 0.0);
    for (size_t t = 0; t < seq.frame_count(); ++t)
        for (size_t i = 0; i < seq.dim; ++i)
            acc[i] += alpha[t] * (phi[t][i] - phi[0][i]);
    DynamicMap m;
    m.provenance = PoolMode::Approximate;
    m.weights.resize(seq.dim);
    for (size_t i = 0; i < seq.dim; ++i) m.weights[i] = static_cast<float>(acc[i]);
    return m;
}

DynamicMap rank_pool(const FeatureSequence& seq, const RankPoolConfig& cfg) {
    return cfg.mode == PoolMode::Exact ? solve_exact(seq, cfg) : solve_approximate(seq);
}

}  // namespace learnet
