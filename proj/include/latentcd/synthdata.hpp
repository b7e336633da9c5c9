#pragma once

#include <cstdint>
#include <vector>

#include "latentcd/condition.hpp"
#include "latentcd/f0.hpp"
#include "latentcd/schedule.hpp"
#include "latentcd/tensor.hpp"

namespace latentcd {

// A synthetic "singer": a fixed speaker embedding plus an F0 contour, tied to
// one mixture component so conditioning is informative about the component.
struct SingerProfile {
    Vec speaker;
    F0Contour f0;
};

struct GaussianComponent {
    Vec mean;
    Vec var;  // diagonal
    SingerProfile singer;
};

// Diagonal-Gaussian (or equal-weight mixture) latent distribution with one
// singer per component. All moments are in closed form, which is what makes
// desk-scale verification possible.
struct DataSpec {
    int dim = 0;
    int content_dim = 0;
    std::vector<GaussianComponent> components;

    static DataSpec gaussian(Vec mean, Vec var, int content_dim, int speaker_dim,
                             std::uint64_t singer_seed);
    static DataSpec mixture(std::vector<Vec> means, std::vector<Vec> vars,
                            int content_dim, int speaker_dim, std::uint64_t singer_seed);

    Vec mixture_mean() const;
    // Full covariance of the equal-weight mixture, row-major dim x dim.
    std::vector<double> mixture_cov() const;
};

struct LatentBatch {
    int dim = 0;
    std::vector<Vec> z;
    std::vector<Condition> cond;
    std::vector<int> component;  // generating component index per row

    std::size_t size() const { return z.size(); }
};

// Draws n rows: component uniform, latent from that component's Gaussian,
// content features standard normal, F0/speaker from the component's singer.
LatentBatch sample_dataset(const DataSpec& spec, int n, std::uint64_t seed);

// Closed-form diagonal-Gaussian reference distribution for the oracle maps.
struct GaussianOracle {
    Vec mean;
    Vec var;
};

// Exact posterior mean E[z0 | z_t] when z0 ~ N(mean, diag(var)) and
// z_t = alpha_hat z0 + sigma_hat eps.
Vec oracle_posterior_mean(const GaussianOracle& o, const Vec& z_t, int t,
                          const NoiseSchedule& s);

// The noise prediction a perfectly trained model would make:
// eps*(z_t, t) = (z_t - alpha_hat E[z0|z_t]) / sigma_hat; zero vector at t = 0.
Vec oracle_eps(const GaussianOracle& o, const Vec& z_t, int t, const NoiseSchedule& s);

struct FlowOptions {
    int substeps = 10000;     // RK4 substeps over the whole integration range
    double tolerance = 1e-8;  // max-abs agreement required between n and 2n substeps
};

// Probability-flow transport from (z_t, t) down to s_target, integrated with
// RK4 against the closed-form Gaussian score. The schedule's log alpha_bar is
// interpolated linearly between integer steps. A step-halving convergence
// check guards the result; t == s_target returns z_t unchanged.
Vec oracle_flow(const GaussianOracle& o, const Vec& z_t, int t, int s_target,
                const NoiseSchedule& s, const FlowOptions& opts = {});

// Closed-form endpoint of the same transport at t = 0. For diagonal Gaussians
// the flow map is linear per coordinate:
//   z_0 = mean + sqrt(var / S_t) * (z_t - alpha_hat(t) mean),
//   S_t = alpha_bar(t) var + 1 - alpha_bar(t).
// Used as an independent cross-check on oracle_flow.
Vec oracle_origin(const GaussianOracle& o, const Vec& z_t, int t, const NoiseSchedule& s);

}  // namespace latentcd
