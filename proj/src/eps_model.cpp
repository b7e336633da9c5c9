#include "latentcd/eps_model.hpp"

#include <stdexcept>
#include <utility>

namespace latentcd {

EpsFn eps_from_model(const DenoiserModel& m) {
    const DenoiserModel* p = &m;
    return [p](const Vec& z, int t, const Condition& c) { return p->eval(z, t, c); };
}

EpsFn eps_from_model(std::shared_ptr<const DenoiserModel> m) {
    if (!m) throw std::invalid_argument("eps_from_model: null model");
    return [m = std::move(m)](const Vec& z, int t, const Condition& c) {
        return m->eval(z, t, c);
    };
}

EpsFn eps_from_oracle(GaussianOracle o, const NoiseSchedule& s) {
    // The schedule is captured by value: a handful of doubles, and the
    // closure stays valid however long the caller keeps it.
    return [o = std::move(o), s](const Vec& z, int t, const Condition&) {
        return oracle_eps(o, z, t, s);
    };
}

EpsFn counted_eps(EpsFn fn, std::shared_ptr<std::size_t> counter) {
    if (!counter) throw std::invalid_argument("counted_eps: null counter");
    return [fn = std::move(fn), counter = std::move(counter)](const Vec& z, int t,
                                                              const Condition& c) {
        ++*counter;
        return fn(z, t, c);
    };
}

EpsFn guided_eps(EpsFn fn, double guidance) {
    return [fn = std::move(fn), guidance](const Vec& z, int t, const Condition& c) {
        Vec cond = fn(z, t, c);
        const Vec uncond = fn(z, t, Condition::null_condition());
        for (std::size_t i = 0; i < cond.size(); ++i) {
            cond[i] = (1.0 + guidance) * cond[i] - guidance * uncond[i];
        }
        return cond;
    };
}

}  // namespace latentcd
