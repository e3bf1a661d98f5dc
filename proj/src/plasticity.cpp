#include "ncsim/plasticity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ncsim/rng.hpp"
#include "ncsim/spike_trains.hpp"

namespace ncsim::plasticity {

const char* to_string(Eligibility e)
{
    switch (e) {
    case Eligibility::None: return "none";
    case Eligibility::Up: return "up";
    case Eligibility::Down: return "down";
    }
    return "?";
}

void PlasticityParams::validate() const
{
    auto require = [](bool ok, const char* what) {
        if (!ok)
            throw std::invalid_argument(std::string("plasticity: ") + what);
    };
    require(w_lo < theta_w && theta_w < w_hi, "need w_lo < theta_w < w_hi");
    require(theta_k1 < theta_k2 && theta_k2 < theta_k3,
            "need theta_k1 < theta_k2 < theta_k3");
    require(delta_w >= 0.0 && drift_rate >= 0.0 && j_ca >= 0.0,
            "rates must be >= 0");
    require(tau_ca > 0.0, "tau_ca must be > 0");
}

void PlasticityParams::anchor_calcium_thresholds(double anchor_rate,
                                                 double k1, double k2,
                                                 double k3)
{
    const double level = j_ca * anchor_rate * tau_ca;
    theta_k1 = k1 * level;
    theta_k2 = k2 * level;
    theta_k3 = k3 * level;
}

double calcium_step(double ca, double dt, bool post_spiked,
                    const PlasticityParams& p)
{
    ca *= std::exp(-dt / p.tau_ca);
    if (post_spiked) ca += p.j_ca;
    return ca;
}

Eligibility eligibility(double i_mem_post, double ca,
                        const PlasticityParams& p)
{
    if (i_mem_post > p.theta_m && ca > p.theta_k1 && ca < p.theta_k3)
        return Eligibility::Up;
    if (i_mem_post < p.theta_m && ca > p.theta_k1 && ca < p.theta_k2)
        return Eligibility::Down;
    return Eligibility::None;
}

PlasticSynapseState on_pre_spike_update(PlasticSynapseState s,
                                        double i_mem_post, double ca,
                                        const PlasticityParams& p)
{
    switch (eligibility(i_mem_post, ca, p)) {
    case Eligibility::Up: s.w = std::min(p.w_hi, s.w + p.delta_w); break;
    case Eligibility::Down: s.w = std::max(p.w_lo, s.w - p.delta_w); break;
    case Eligibility::None: break;
    }
    return s;
}

PlasticSynapseState bistable_drift(PlasticSynapseState s, double dt,
                                   const PlasticityParams& p)
{
    const double step = p.drift_rate * dt;
    if (s.w > p.theta_w)
        s.w = std::min(p.w_hi, s.w + step);
    else
        s.w = std::max(p.w_lo, s.w - step);
    return s;
}

namespace {

std::vector<long> to_steps(const std::vector<double>& times, double dt)
{
    std::vector<long> out;
    out.reserve(times.size());
    for (double t : times)
        out.push_back(static_cast<long>(std::ceil(t / dt - 1e-9)));
    return out;
}

}  // namespace

TrialOutcome run_transition_trial(const TransitionProtocol& proto,
                                  double pre_rate, double teacher_rate,
                                  double duration, double w_initial,
                                  std::uint64_t seed)
{
    const auto& np = proto.neuron;
    const auto& pp = proto.plasticity;
    const double dt = proto.dt;
    const auto pre = to_steps(
        engine::poisson_train(pre_rate, 0.0, duration,
                              rng::derive_seed(seed, "pre")),
        dt);
    const auto teach = to_steps(
        engine::poisson_train(teacher_rate, 0.0, duration,
                              rng::derive_seed(seed, "teacher")),
        dt);

    TrialOutcome out;
    out.w_initial = w_initial;
    out.pre_spikes = pre.size();

    neuron::NeuronState ns = neuron::initial_state(np);
    synapse::SynapseState teacher = synapse::initial_state(proto.teacher);
    synapse::SynapseState plastic =
        synapse::initial_state(proto.plastic_synapse);
    PlasticSynapseState ws{w_initial};
    double ca = 0.0;

    const double teacher_decay = std::exp(-dt / proto.teacher.tau_syn);
    const double plastic_decay = std::exp(-dt / proto.plastic_synapse.tau_syn);
    std::size_t ip = 0, it = 0;
    const auto n_steps = static_cast<long>(std::llround(duration / dt));
    for (long k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        while (it < teach.size() && teach[it] <= k) {
            teacher = synapse::inject_pulse(teacher, proto.teacher.w_rest,
                                            proto.teacher);
            ++it;
        }
        while (ip < pre.size() && pre[ip] <= k) {
            plastic = synapse::inject_pulse(plastic, ws.w,
                                            proto.plastic_synapse);
            const double before = ws.w;
            ws = on_pre_spike_update(ws, ns.i_mem, ca, pp);
            if (ws.w > before) ++out.up_jumps;
            if (ws.w < before) ++out.down_jumps;
            ++ip;
        }
        double i_in =
            synapse::gated_output(teacher, ns.i_mem, proto.teacher, np.i_spk) +
            synapse::gated_output(plastic, ns.i_mem, proto.plastic_synapse,
                                  np.i_spk);
        if (i_in < 0.0) i_in = 0.0;
        const bool spiked = neuron::step(ns, i_in, t, dt, np);
        teacher.filter.i_out *= teacher_decay;
        plastic.filter.i_out *= plastic_decay;
        ws = bistable_drift(ws, dt, pp);
        ca = calcium_step(ca, dt, spiked, pp);
        if (spiked) ++out.post_spikes;
    }
    out.w_final = ws.w;
    const bool was_high = w_initial > pp.theta_w;
    const bool is_high = ws.w > pp.theta_w;
    out.ltp = !was_high && is_high;
    out.ltd = was_high && !is_high;
    return out;
}

double calibrate_teacher_rate(const TransitionProtocol& proto,
                              double target_post_rate, double duration,
                              std::uint64_t seed, double pre_rate,
                              double w_initial)
{
    if (w_initial < 0.0) w_initial = proto.plasticity.w_lo;
    constexpr int kSeeds = 8;
    auto mean_rate = [&](double teacher_rate) {
        double total = 0.0;
        for (int s = 0; s < kSeeds; ++s) {
            const auto o = run_transition_trial(
                proto, pre_rate, teacher_rate, duration, w_initial,
                rng::derive_seed(seed, "calibrate", static_cast<unsigned>(s)));
            total += static_cast<double>(o.post_spikes) / duration;
        }
        return total / kSeeds;
    };
    double lo = 0.0, hi = 100.0;
    while (mean_rate(hi) < target_post_rate) {
        hi *= 2.0;
        if (hi > 1e6)
            throw std::runtime_error("calibrate_teacher_rate: target rate " +
                                     std::to_string(target_post_rate) +
                                     " Hz is unreachable");
    }
    for (int iter = 0; iter < 20; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (mean_rate(mid) < target_post_rate ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double ltp_transition_probability(const TransitionProtocol& proto,
                                  double pre_rate, double post_rate,
                                  double duration, std::size_t n_trials,
                                  std::uint64_t seed)
{
    if (n_trials == 0)
        throw std::invalid_argument("ltp_transition_probability: n_trials < 1");
    const double teacher_rate =
        post_rate > 0.0 ? calibrate_teacher_rate(proto, post_rate, duration, seed)
                        : 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n_trials; ++i) {
        const auto o = run_transition_trial(
            proto, pre_rate, teacher_rate, duration, proto.plasticity.w_lo,
            rng::derive_seed(seed, "trial", i));
        if (o.ltp) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n_trials);
}

}  // namespace ncsim::plasticity
