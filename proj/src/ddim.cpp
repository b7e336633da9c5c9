#include "latentcd/ddim.hpp"

#include <stdexcept>

namespace latentcd {

Vec ddim_step(const EpsFn& eps, const Vec& z_from, int t_from, int t_to,
              const Condition& c, const NoiseSchedule& s) {
    if (t_from < 1 || t_from > s.steps()) {
        throw std::out_of_range("ddim_step: source step outside 1..T");
    }
    if (t_to < 0) throw std::out_of_range("ddim_step: target step negative");
    if (t_to > t_from) {
        throw std::invalid_argument("ddim_step: target step must not exceed the source");
    }
    if (t_to == t_from) return z_from;

    const auto from = s.coeffs_at(t_from);
    const auto to = s.coeffs_at(t_to);
    const Vec eps_hat = eps(z_from, t_from, c);
    if (eps_hat.size() != z_from.size()) {
        throw std::invalid_argument("ddim_step: predictor dimension mismatch");
    }
    Vec out(z_from.size());
    for (std::size_t i = 0; i < z_from.size(); ++i) {
        const double z0_hat = (z_from[i] - from.sigma_hat * eps_hat[i]) / from.alpha_hat;
        out[i] = to.alpha_hat * z0_hat + to.sigma_hat * eps_hat[i];
    }
    return out;
}

Vec guided_target(const EpsFn& eps, const Vec& z_from, int t_from, int t_to,
                  const Condition& c, double guidance, const NoiseSchedule& s) {
    if (c.is_null) {
        throw std::invalid_argument("guided_target: needs a concrete condition");
    }
    Vec cond = ddim_step(eps, z_from, t_from, t_to, c, s);
    if (guidance == 0.0) return cond;
    const Vec uncond =
        ddim_step(eps, z_from, t_from, t_to, Condition::null_condition(), s);
    for (std::size_t i = 0; i < cond.size(); ++i) {
        cond[i] = (1.0 + guidance) * cond[i] - guidance * uncond[i];
    }
    return cond;
}

}  // namespace latentcd
