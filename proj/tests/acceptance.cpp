// Acceptance checks.  `acceptance N` runs one criterion, no argument runs
// all of them.  Each prints a single PASS/FAIL line; exit status is
// nonzero if any failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ncsim/aer.hpp"
#include "ncsim/logdomain.hpp"
#include "ncsim/presets.hpp"
#include "ncsim/rng.hpp"
#include "oracles.hpp"

using namespace ncsim;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool ok;
    std::string detail;
};

presets::Artifacts run(const std::string& id, std::uint64_t seed = 1, json params = json::object())
{
    presets::RunOptions o;
    o.seed = seed;
    o.params = std::move(params);
    return presets::run_preset(id, o);
}

const json& metrics(const presets::Artifacts& a) { return a.summary.at("metrics"); }

// ---------------------------------------------------------------------------

Outcome filters()
{
    using namespace logdomain;
    struct Set {
        double tau, i_tau, gain, i0, i_in;
    };
    std::vector<Set> sets;
    for (double tau : {2e-3, 10e-3, 40e-3})
        for (double gain : {0.5, 2.0, 6.0})
            for (double drive : {3.0, 25.0})
                for (double start : {0.05, 4.0})
                    if (sets.size() < 24 && !(start == 4.0 && drive == 3.0 && gain == 0.5))
                        sets.push_back({tau, 2e-12 * gain, gain, start * 2e-12 * gain * drive,
                                        2e-12 * gain * drive});
    double worst_nl = 0;
    for (const auto& s : sets) {
        const auto p = FilterParams::from_tau(s.tau, s.i_tau, s.gain);
        FilterState st{std::max(s.i0, p.floor()), 0.0};
        double y = st.i_out;
        const double dt = s.tau / 20.0;
        for (int k = 0; k < 200; ++k) {
            st = step_nonlinear(st, s.i_in, dt, p);
            y = oracle::rk4(y, dt, 1e-6, [&](double i) {
                return oracle::dpi_rhs(i, s.tau, p.i_th, p.i_tau, s.i_in);
            });
            worst_nl = std::max(worst_nl, std::abs(st.i_out - y) / std::abs(y));
        }
    }
    double worst_lin = 0;
    for (const auto& s : sets) {
        const auto p = FilterParams::from_tau(s.tau, s.i_tau, s.gain);
        FilterState st{s.i0, 0.0};
        const double dt = s.tau / 20.0;
        for (int k = 1; k <= 200; ++k) {
            st = step_linear(st, s.i_in, dt, p);
            const double ref = oracle::linear_closed_form(s.i0, p.gain() * s.i_in, s.tau, k * dt);
            worst_lin = std::max(worst_lin, std::abs(st.i_out - ref) / std::abs(ref));
        }
    }
    return {sets.size() >= 20 && worst_nl <= 1e-3 && worst_lin <= 1e-12,
            fmt::format("{} sets over 10 tau, nonlinear vs RK4 max rel {:.2e} (<= 1e-3), linear vs closed form {:.2e} (<= 1e-12)",
                        sets.size(), worst_nl, worst_lin)};
}

Outcome depression()
{
    const auto m = metrics(run("fig6-std"));
    std::string amps;
    for (const auto& s : m.at("settings"))
        amps += fmt::format(" d_std={}:{}", s.at("d_std").get<double>(),
                            s.at("strictly_decreasing").get<bool>() ? "dec" : "not-dec");
    const bool ok = m.at("settings").size() == 3 && m.at("decreasing_when_depressing").get<bool>() &&
                    m.at("largest_late_trend_negative").get<bool>();
    return {ok, fmt::format("50 Hz train,{}; late i_mem slope at largest {:.3e} A/s",
                            amps, m.at("largest_late_slope").get<double>())};
}

Outcome bursting()
{
    const auto m = metrics(run("fig7-bursting"));
    const auto& b = m.at("bursting");
    const auto& s = m.at("stable");
    const double cv_b = b.at("isi_cv"), lag = b.at("isi_lag1"), cv_s = s.at("isi_cv");
    return {cv_b > 0.5 && lag < 0 && cv_s < 0.1 && s.at("isi_count").get<int>() > 2,
            fmt::format("bursting CV {:.3f} lag1 {:.3f}; stable CV {:.4f}", cv_b, lag, cv_s)};
}

Outcome transitions()
{
    const auto m = metrics(run("fig9-ltd"));
    const auto& st = m.at("stimulated");
    const int trials = m.at("trials");
    const int ltd = st.at("ltd"), ltp = st.at("ltp");
    const int control = m.at("control_transitions");
    return {trials == 200 && 2 * ltd > trials && 2 * ltp < trials && control == 0,
            fmt::format("{} seeds: LTD {}, LTP {}, transitions at pre rate 0: {}", trials, ltd, ltp, control)};
}

Outcome learning()
{
    const auto m = metrics(run("fig11-ini-learning"));
    const int n = m.at("synapses");
    const double wf = m.at("white_potentiated_fraction"), bf = m.at("black_potentiated_fraction");
    const double r2 = m.at("fit").at("r2");
    const bool mono = m.at("ltp_nonincreasing");
    return {n == 3472 && wf > 0 && wf >= 5 * bf && mono && r2 >= 0.8,
            fmt::format("{} synapses, potentiated white {:.3f} black {:.3f}, LTP counts {}, "
                        "non-increasing {}, exp fit R2 {:.3f}",
                        n, wf, bf, m.at("ltp_counts").dump(), mono, r2)};
}

Outcome competition()
{
    const auto m = metrics(run("fig12-swta"));
    const double ratio = m.at("suppression_ratio");
    bool ok = m.at("higher_input_wins").get<bool>() && ratio < 0.5;
    int swaps = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto ms = metrics(run("fig12-swta", seed, {{"controls", false}}));
        swaps += ms.at("higher_input_wins").get<bool>() && ms.at("swap_follows_input").get<bool>();
    }
    ok = ok && swaps >= 18;
    return {ok, fmt::format("higher input wins {}, loser competition/alone rate {:.3f} (< 0.5), "
                            "winner follows the swap in {}/20 seeds",
                            m.at("higher_input_wins").get<bool>(), ratio, swaps)};
}

Outcome fsm()
{
    const auto m = metrics(run("fig13-fsm"));
    const auto& p = m.at("pulses");
    const bool first = p.size() >= 2 && p[0].at("state") == 0 && p[0].at("held").get<bool>();
    const bool second = p.size() >= 2 && p[1].at("state") == 1 && p[1].at("held").get<bool>();
    const bool control = !m.at("control").at("held_any").get<bool>();
    return {first && second && control,
            fmt::format("pop1 held for 0.5 s after its pulse {} (min {:.0f} Hz vs {:.0f} Hz), "
                        "switch on pop2 pulse {}, w_self=0 persistence {} (max {:.1f} Hz)",
                        first, p[0].at("min_target_rate").get<double>(),
                        p[0].at("max_other_rate").get<double>(), second, !control,
                        m.at("control").at("max_post_pulse_rate").get<double>())};
}

Outcome aer_checks()
{
    rng::Stream s(7, "acceptance-aer");
    aer::ArbiterConfig cfg;
    int fifo_fail = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<aer::AddressEvent> ev;
        double t = 0;
        const auto n = 1 + s.next_u32() % 400;
        const auto sources = 1 + s.next_u32() % 32;
        for (std::uint32_t i = 0; i < n; ++i) {
            if (s.uniform() < 0.5) t += s.exponential(1e6);
            ev.push_back({t, {s.next_u32() % 2, s.next_u32() % sources}, i});
        }
        const auto res = aer::arbitrate(ev, cfg);
        std::map<aer::Address, std::pair<double, std::uint64_t>> last;
        bool ok = res.log.size() == ev.size();
        for (const auto& d : res.log) {
            ok = ok && !d.dropped && d.depart >= d.event.t;
            auto it = last.find(d.event.src);
            if (it != last.end()) ok = ok && d.depart > it->second.first && d.event.seq > it->second.second;
            last[d.event.src] = {d.depart, d.event.seq};
        }
        fifo_fail += !ok;
    }

    aer::ArbiterConfig fast;
    fast.service_time = 244e-9;
    std::vector<aer::AddressEvent> burst;
    for (std::uint32_t i = 0; i < 4096; ++i) burst.push_back({0.0, {0, i}, i});
    const auto res = aer::arbitrate(burst, fast);
    const auto bw = aer::bandwidth_stats(res.log);
    const bool burst_ok = res.dropped == 0 && bw.max_delay < 1e-3;

    int runs = 0, bad = 0;
    for (const auto& p : presets::catalog()) {
        const auto a = run(p.id);
        for (const auto& r : a.runs) {
            ++runs;
            bad += !engine::conserved(r.record, r.network);
        }
    }
    return {fifo_fail == 0 && burst_ok && bad == 0,
            fmt::format("FIFO violations in 1000 random cases: {}; 4096 coincident events, last departs "
                        "after {:.3f} ms, dropped {}; conservation failures {}/{} engine runs",
                        fifo_fail, bw.max_delay * 1e3, res.dropped, bad, runs)};
}

Outcome determinism()
{
    int differ = 0, slow = 0, unversioned = 0;
    std::string worst;
    double worst_t = 0;
    for (const auto& p : presets::catalog()) {
        std::vector<std::string> csv;
        for (const char* th : {"1", "4"}) {
            ::setenv("NCSIM_THREADS", th, 1);
            const auto t0 = Clock::now();
            const auto a = run(p.id, 42);
            const double el = seconds_since(t0);
            if (el > worst_t) worst_t = el, worst = p.id;
            slow += el > 60.0;
            unversioned += a.summary.value("schema", "") != presets::kSummarySchema ||
                           a.summary.value("seed", 0ull) != 42ull;
            std::ostringstream os;
            for (const auto& r : a.runs) {
                os << "# " << r.name << '\n';
                engine::write_spikes_csv(os, r.record);
            }
            csv.push_back(os.str());
        }
        differ += csv[0] != csv[1];
    }
    ::unsetenv("NCSIM_THREADS");
    const auto n = presets::catalog().size();
    return {differ == 0 && slow == 0 && unversioned == 0,
            fmt::format("{}/{} presets byte-identical at NCSIM_THREADS=1 vs 4; slowest {} {:.1f} s (< 60 s); "
                        "summaries missing schema/seed: {}",
                        n - differ, n, worst, worst_t, unversioned)};
}

struct Criterion {
    const char* name;
    double budget;  // seconds
    std::function<Outcome()> check;
};

const std::vector<Criterion> kCriteria = {
    {"log-domain kernels", 10, filters},
    {"short-term depression", 5, depression},
    {"bursting vs stable adaptation", 10, bursting},
    {"stochastic transitions", 60, transitions},
    {"pattern learning", 300, learning},
    {"soft winner-take-all", 60, competition},
    {"state machine", 60, fsm},
    {"address-event routing", 600, aer_checks},
    {"thread-count determinism", 600, determinism},
};

bool run_one(std::size_t k)
{
    const auto& c = kCriteria[k];
    const auto t0 = Clock::now();
    Outcome o{false, ""};
    try {
        o = c.check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double el = seconds_since(t0);
    const bool ok = o.ok && el <= c.budget;
    std::printf("%s %zu %s: %s [%.2f s, budget %.0f s]\n", ok ? "PASS" : "FAIL", k + 1, c.name,
                o.detail.c_str(), el, c.budget);
    std::fflush(stdout);
    return ok;
}

}  // namespace

int main(int argc, char** argv)
{
    bool ok = true;
    if (argc < 2) {
        for (std::size_t k = 0; k < kCriteria.size(); ++k) ok = run_one(k) && ok;
    } else {
        for (int i = 1; i < argc; ++i) {
            const long k = std::strtol(argv[i], nullptr, 10);
            if (k < 1 || k > static_cast<long>(kCriteria.size())) {
                std::fprintf(stderr, "unknown criterion '%s'\n", argv[i]);
                return 2;
            }
            ok = run_one(static_cast<std::size_t>(k - 1)) && ok;
        }
    }
    return ok ? 0 : 1;
}
