#include <doctest.h>

#include <cmath>

#include "ncsim/presets.hpp"

using namespace ncsim::presets;

TEST_CASE("isi statistics of a regular and an alternating train")
{
    std::vector<double> reg;
    for (int i = 0; i < 50; ++i) reg.push_back(0.01 * i);
    const auto r = isi_stats(reg);
    CHECK(r.n == 49);
    CHECK(r.mean == doctest::Approx(0.01));
    CHECK(r.cv == doctest::Approx(0.0).epsilon(1e-6));

    std::vector<double> alt{0.0};
    for (int i = 0; i < 40; ++i) alt.push_back(alt.back() + (i % 2 ? 0.1 : 0.005));
    const auto a = isi_stats(alt);
    CHECK(a.cv > 0.5);
    CHECK(a.lag1 == doctest::Approx(-1.0).epsilon(1e-3));

    const auto late = isi_stats(reg, 0.25);
    CHECK(late.n < r.n);
    CHECK(isi_stats({}).n == 0);
}

TEST_CASE("linear fit recovers a line")
{
    std::vector<double> x, y;
    for (int i = 0; i < 20; ++i) {
        x.push_back(i);
        y.push_back(3.0 - 0.25 * i);
    }
    const auto f = linear_fit(x, y);
    CHECK(f.slope == doctest::Approx(-0.25));
    CHECK(f.intercept == doctest::Approx(3.0));
}

TEST_CASE("exponential fit on exact and noisy data")
{
    std::vector<double> x, y;
    for (int i = 0; i < 12; ++i) {
        x.push_back(i);
        y.push_back(400.0 * std::exp(-0.6 * i));
    }
    const auto f = exp_decay_fit(x, y);
    CHECK(f.amplitude == doctest::Approx(400.0).epsilon(1e-4));
    CHECK(f.rate == doctest::Approx(0.6).epsilon(1e-4));
    CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-8));

    // zeros in the tail are fine in the original domain
    for (std::size_t i = 4; i < y.size(); ++i) y[i] = 0;
    const auto g = exp_decay_fit(x, y);
    CHECK(g.r2 > 0.95);

    const std::vector<double> flat(12, 5.0);
    CHECK(exp_decay_fit(x, flat).r2 < 0.5);
}

TEST_CASE("parameter merging is strict")
{
    const auto d = default_params("fig6-std");
    CHECK(merge_params("fig6-std", nlohmann::json::object()) == d);
    const auto m = merge_params("fig6-std", {{"rate", 40.0}});
    CHECK(m["rate"] == 40.0);
    CHECK_THROWS_AS(merge_params("fig6-std", {{"rates", 40.0}}), ConfigError);
    CHECK_THROWS_AS(merge_params("fig6-std", {{"rate", "fast"}}), ConfigError);
    CHECK_THROWS_AS(default_params("fig99"), ConfigError);
    for (const auto& p : catalog()) CHECK(default_params(p.id).is_object());
}
