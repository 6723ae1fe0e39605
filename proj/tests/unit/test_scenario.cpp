//
// dhnopt - district heating network optimal control
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <complex>
#include <numbers>

#include "dhn/error.hpp"
#include "test_support.hpp"

using namespace dhn;

namespace {

double magnitude(const std::vector<Biquad>& sections, double f_hz, double fs_hz) {
  const std::complex<double> z = std::polar(1.0, 2.0 * std::numbers::pi * f_hz / fs_hz);
  const std::complex<double> zi = 1.0 / z;
  std::complex<double> h = 1.0;
  for (const Biquad& s : sections)
    h *= (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
  return std::abs(h);
}

LoadSeries daily_shape(std::size_t samples, double interval_s) {
  LoadSeries s;
  s.interval_s = interval_s;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = s.time(i);
    s.values_w.push_back(1e5 * (1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * t / 86400.0)
                                + 0.1 * std::cos(2.0 * std::numbers::pi * t / 21600.0)));
  }
  return s;
}

}  // namespace

TEST_CASE("Butterworth sections follow the prewarped magnitude") {
  const double fs = 1.0 / 900.0, fc = 69.4e-6;
  const auto sections = butterworth_lowpass(4, fc, fs);
  REQUIRE(sections.size() == 2);
  for (const Biquad& s : sections)
    CHECK(s.dc_gain() == doctest::Approx(1.0).epsilon(1e-14));
  const double wc = std::tan(std::numbers::pi * fc / fs);
  for (double ratio : {0.1, 0.167, 0.5, 1.0, 2.0, 5.0}) {
    const double f = ratio * fc;
    const double w = std::tan(std::numbers::pi * f / fs);
    const double expect = 1.0 / std::sqrt(1.0 + std::pow(w / wc, 8.0));
    CHECK(magnitude(sections, f, fs) == doctest::Approx(expect).epsilon(1e-10));
  }
  CHECK(magnitude(sections, 0.5 * fc / 3.0, fs) > 0.9999);
  CHECK_THROWS_AS(butterworth_lowpass(3, fc, fs), InputError);
  CHECK_THROWS_AS(butterworth_lowpass(4, 0.6 * fs, fs), InputError);
}

TEST_CASE("zero-phase filtering") {
  const auto sections = butterworth_lowpass(4, 69.4e-6, 1.0 / 900.0);
  CHECK(filtfilt_padding(sections) == 15);

  SUBCASE("constants pass unchanged") {
    const std::vector<double> x(289, 123456.789);
    for (double v : filtfilt(sections, x))
      CHECK(v == doctest::Approx(123456.789).epsilon(1e-12));
  }
  SUBCASE("the daily cycle passes with no phase shift") {
    LoadSeries s;
    s.interval_s = 900.0;
    for (std::size_t i = 0; i < 960; ++i)
      s.values_w.push_back(std::sin(2.0 * std::numbers::pi * s.time(i) / 86400.0));
    const std::vector<double> y = filtfilt(sections, s.values_w);
    for (std::size_t i = 200; i < 760; ++i)
      CHECK(y[i] == doctest::Approx(s.values_w[i]).epsilon(1e-3).scale(1.0));
  }
  SUBCASE("short series are rejected") {
    CHECK_THROWS_AS(filtfilt(sections, std::vector<double>(15, 1.0)), InputError);
    LoadSeries s;
    s.values_w.assign(7, 1.0);
    CHECK_THROWS_AS(lowpass(s, 4, 69.4e-6), InputError);
  }
  SUBCASE("a slow input is a near fixed point of the low-pass") {
    LoadSeries slow;
    slow.interval_s = 900.0;
    for (std::size_t i = 0; i < 289; ++i)
      slow.values_w.push_back(1e5 + 3e4 * std::sin(2.0 * std::numbers::pi * slow.time(i) / 86400.0));
    const LoadSeries once = lowpass(slow, 4, 69.4e-6);
    const LoadSeries twice = lowpass(once, 4, 69.4e-6);
    // away from the padded ends
    for (std::size_t i = 48; i + 48 < once.size(); ++i)
      CHECK(twice.values_w[i] == doctest::Approx(once.values_w[i]).epsilon(1e-3));
  }
}

TEST_CASE("demand variations") {
  const LoadSeries base = daily_shape(289, 900.0);
  const FrequencyBand band;
  const std::vector<std::string> keys{"c1", "c2", "c3"};
  const std::vector<double> targets{1e4, 2e4, 3e4};

  SUBCASE("sigma zero reproduces the base shape") {
    const auto out = synthesize_variations(base, keys, band, 0.0, 5, targets);
    for (std::size_t i = 0; i < keys.size(); ++i)
      for (std::size_t k = 0; k < base.size(); ++k)
        CHECK(out[i].values_w[k]
              == doctest::Approx(base.values_w[k] * targets[i] / base.mean()).epsilon(1e-9));
  }
  SUBCASE("means hit their targets") {
    const auto out = synthesize_variations(base, keys, band, 0.4, 5, targets);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      CHECK(out[i].mean() == doctest::Approx(targets[i]).epsilon(1e-12));
      for (double v : out[i].values_w)
        CHECK(v >= 0.0);
    }
  }
  SUBCASE("seeding") {
    const auto a = synthesize_variations(base, keys, band, 0.2, 5, targets);
    const auto b = synthesize_variations(base, keys, band, 0.2, 5, targets, 3);
    const auto c = synthesize_variations(base, keys, band, 0.2, 6, targets);
    bool differs = false;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      CHECK(a[i].values_w == b[i].values_w);
      differs = differs || a[i].values_w != c[i].values_w;
    }
    CHECK(differs);
    CHECK(stream_seed(5, "c1") != stream_seed(5, "c2"));
    CHECK(stream_seed(5, "c1") != stream_seed(6, "c1"));
  }
  SUBCASE("a consumer's stream does not depend on the others") {
    const std::vector<std::string> one{"c3"};
    const std::vector<double> t{3e4};
    const auto alone = synthesize_variations(base, one, band, 0.2, 5, t);
    const auto all = synthesize_variations(base, keys, band, 0.2, 5, targets);
    CHECK(alone[0].values_w == all[2].values_w);
  }
  SUBCASE("bad inputs") {
    CHECK_THROWS_AS(synthesize_variations(base, keys, band, -1.0, 5, targets), InputError);
    CHECK_THROWS_AS(synthesize_variations(base, keys, {1e-3, 2e-3}, 0.2, 5, targets),
                    InputError);
  }
}

TEST_CASE("resampling onto the grid") {
  const TimeSeries price({0.0, 3600.0, 7200.0}, {10.0, 20.0, 20.0});
  const std::vector<double> r = resample_to_grid(price, {1800.0, 4});
  CHECK(r[0] == 10.0);
  CHECK(r[1] == doctest::Approx(15.0));
  CHECK(r[2] == 20.0);
  CHECK_THROWS_AS(resample_to_grid(price, {1800.0, 5}), InputError);
  CHECK(TimeGrid{900.0, 288}.horizon() == 3.0 * 86400.0);

  SUBCASE("affine series are reproduced exactly") {
    test::Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
      const double a = rng.uniform(-50, 50), b = rng.uniform(-1e-3, 1e-3);
      std::vector<double> t{0.0}, v;
      while (t.back() < 86400.0)
        t.push_back(t.back() + rng.uniform(100.0, 5000.0));
      for (double x : t)
        v.push_back(a + b * x);
      const TimeGrid grid{600.0, 144};
      const std::vector<double> out = resample_to_grid(TimeSeries(t, v), grid);
      for (std::size_t j = 0; j <= grid.steps; ++j)
        CHECK(out[j] == doctest::Approx(a + b * grid.time(j)).epsilon(1e-12).scale(50.0));
    }
  }
}

TEST_CASE("desk fixture scenario") {
  const app::RunConfig c = test::fixture_config("desk", "static.json", "scenario_desk");
  const Scenario s = app::load_scenario(c);
  CHECK(s.grid().steps == 288);
  CHECK(s.consumer_ids.size() == 10);
  CHECK(s.num_plants() == 1);
  CHECK(s.price.is_static);
  CHECK(s.demand_w.cols() == 289);
  for (double p : s.step_price)
    CHECK(p == 1.0);

  const app::RunConfig d = test::fixture_config("desk", "dynamic.json", "scenario_desk_dyn");
  const Scenario dyn = app::load_scenario(d);
  CHECK_FALSE(dyn.price.is_static);
  CHECK(dyn.price.beta == 0.0);
  CHECK(dyn.step_price[0] == doctest::Approx(40.0));   // 00:15
  CHECK(dyn.step_price[40] == doctest::Approx(90.0));  // 10:15
  REQUIRE(dyn.initial_control);
  CHECK((*dyn.initial_control)[0] == 85.0);
}

TEST_CASE("file round trips") {
  const auto dir = test::scratch_dir("scenario_files");
  const LoadSeries base = daily_shape(97, 900.0);
  write_load_series(base, dir / "load.csv");
  const LoadSeries back = read_load_series(dir / "load.csv");
  CHECK(back.interval_s == 900.0);
  CHECK(back.values_w == base.values_w);

  const TimeSeries price({0.0, 3600.0, 7200.0}, {40.5, 90.25, 1e-3});
  write_price_series(price, dir / "price.csv");
  const TimeSeries p = read_price_series(dir / "price.csv");
  CHECK(p.times() == price.times());
  CHECK(p.values() == price.values());

  DemandSet d;
  d.consumer_ids = {"a", "b"};
  d.series = {base, daily_shape(97, 900.0)};
  d.series[1].values_w[3] = 0.0;
  write_demand_set(d, dir / "demand.csv");
  const DemandSet e = read_demand_set(dir / "demand.csv");
  REQUIRE(e.size() == 2);
  CHECK(e.find("b")->values_w == d.series[1].values_w);
  CHECK(e.find("zzz") == nullptr);

  std::ofstream(dir / "uneven.csv") << "time_s,power_w\n0,1\n900,1\n2000,1\n";
  CHECK_THROWS_AS(read_load_series(dir / "uneven.csv"), InputError);
}
