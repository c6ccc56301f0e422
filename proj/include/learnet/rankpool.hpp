#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "learnet/errors.hpp"

namespace learnet {

// Ordered per-frame feature vectors of one clip. Features are the flattened
// RGB planes of each frame scaled to [0, 1], dimension D = 3 * height * width,
// channel-major.
struct FeatureSequence {
    size_t dim = 0;
    std::vector<std::vector<float>> frames;

    size_t frame_count() const { return frames.size(); }
};

enum class PoolMode { Exact, Approximate };

struct RankPoolConfig {
    double delta = 1.0;        // quadratic regularizer weight
    int max_iters = 2000;
    double step_size = 1e-2;
    double tolerance = 1e-9;   // stop when the per-iteration objective improvement drops below this
    PoolMode mode = PoolMode::Approximate;
};

// The solved ranking direction for one clip: scores <d, phi_t> increase with
// frame index t.
struct DynamicMap {
    std::vector<float> weights;
    PoolMode provenance = PoolMode::Approximate;
    std::optional<double> objective;  // final objective, exact mode only
};

// phi_t: mean of the first t feature vectors, 1-based t.
std::vector<float> time_average(const FeatureSequence& seq, size_t t);

// Inner product <d, phi>.
double rank_score(const std::vector<float>& d, const std::vector<float>& phi);

// (delta/2)*||d||^2 + (2/(T(T-1))) * sum_{l>t} max{0, 1 - psi(l) + psi(t)}
// over scores psi of the time-averaged features.
double rank_objective(const std::vector<float>& d, const FeatureSequence& seq, double delta);

// Subgradient descent on the ranking objective from d = 0. Keeps the best
// iterate seen, so the returned objective never exceeds the value at zero.
DynamicMap solve_exact(const FeatureSequence& seq, const RankPoolConfig& cfg);

// Closed-form coefficients alpha_t = 2(T - t + 1) - (T + 1)(H_T - H_{t-1});
// the approximate map is sum_t alpha_t * phi_t with no optimization.
std::vector<double> approx_coefficients(size_t frame_count);

DynamicMap solve_approximate(const FeatureSequence& seq);

// Dispatches on cfg.mode.
DynamicMap rank_pool(const FeatureSequence& seq, const RankPoolConfig& cfg);

}  // namespace learnet
