#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ghfd/array_estimator.hpp"
#include "support.hpp"

using namespace ghfd;
using ghfd::test::clean_config;
using ghfd::test::make_target;

namespace {

struct Scene {
  RadioConfig radio;
  ProductStream stream;
  VaPeak peak;
};

Scene scene(double spacing, double v_mid, double a, double doa, double tof, double snr_db) {
  Scene s;
  s.radio.antenna_spacing_wavelengths = spacing;
  SimConfig cfg = clean_config({make_target(window_start_velocity(v_mid, a, 80, 1.0 / 488.0), a,
                                            doa, tof)},
                               23);
  cfg.radio = s.radio;
  cfg.snr_db = snr_db;
  s.stream = remove_static(conjugate_multiply(simulate_csi(cfg, 80)), 80);
  s.peak.velocity = v_mid;
  s.peak.acceleration = a;
  s.peak.magnitude = 1.0;
  return s;
}

}  // namespace

TEST_SUITE("array_estimator") {

TEST_CASE("window start velocity undoes the mid-window shift") {
  CHECK(window_start_velocity(1.0, 2.0, 81, 0.01) == doctest::Approx(1.0 - 2.0 * 0.4));
  CHECK(window_start_velocity(-0.5, 0.0, 80, 0.01) == doctest::Approx(-0.5));
}

TEST_CASE("rotation de-chirps a matching target") {
  const RadioConfig radio;
  const double v = 1.4, a = -0.8, dt = radio.frame_period_s();
  for (auto shape : {RotationShape::kAntennas, RotationShape::kSubcarriers}) {
    const PhaseRotation rot = build_rotation(v, a, shape, radio, 40, 5);
    const Eigen::Index rows = rot.matrix.rows();
    CHECK(rows == (shape == RotationShape::kAntennas ? 3 : 64));
    Eigen::MatrixXcd data(rows, 40);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double f = radio.subcarrier_hz(shape == RotationShape::kAntennas ? 5 : r);
      for (int w = 0; w < 40; ++w) {
        const double t = w * dt;
        data(r, w) = std::polar(2.0, 0.3 * r - 2 * kPi * f / kSpeedOfLight * (v * t + a * t * t / 2));
      }
    }
    const Eigen::MatrixXcd flat = rotate(data, rot);
    for (Eigen::Index r = 0; r < rows; ++r) {
      CHECK((flat.row(r).array() - flat(r, 0)).abs().maxCoeff() < 1e-9);
    }
    CHECK(rot.matrix.cwiseAbs().minCoeff() == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(rotate(Eigen::MatrixXcd::Zero(3, 39), build_rotation(v, a, RotationShape::kAntennas,
                                                                        radio, 40)),
                  DataError);
  CHECK_THROWS_AS(build_rotation(v, a, RotationShape::kAntennas, radio, 40, 64), ConfigError);
}

TEST_CASE("a static hypothesis leaves the data untouched") {
  const RadioConfig radio;
  for (auto shape : {RotationShape::kAntennas, RotationShape::kSubcarriers}) {
    const PhaseRotation rot = build_rotation(0.0, 0.0, shape, radio, 80);
    CHECK((rot.matrix.array() - cd(1.0)).abs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("alias sets follow the grating-lobe law") {
  const auto one = alias_set(30.0, 1.0);
  REQUIRE(one.size() == 2);
  CHECK(one[0] == doctest::Approx(-30.0));
  CHECK(one[1] == doctest::Approx(30.0));
  CHECK(alias_set(30.0, 0.5) == std::vector<double>{30.0});
  const auto two = alias_set(0.0, 2.0);
  REQUIRE(two.size() == 5);
  CHECK(two.front() == doctest::Approx(-90.0));
  CHECK(two[1] == doctest::Approx(-30.0));
  CHECK(two[2] == 0.0);
  CHECK(two[3] == doctest::Approx(30.0));
  CHECK(two.back() == doctest::Approx(90.0));
  for (double theta : alias_set(12.0, 1.0)) {
    const double shift = (std::sin(theta * kPi / 180) - std::sin(12.0 * kPi / 180)) * 1.0;
    CHECK(std::abs(shift - std::round(shift)) < 1e-12);
  }
  const auto twenty = alias_set(20.0, 1.0);
  REQUIRE(twenty.size() == 2);
  CHECK(twenty[0] == doctest::Approx(std::asin(std::sin(20.0 * kPi / 180) - 1.0) * 180 / kPi));
  CHECK(twenty[0] == doctest::Approx(-41.14).epsilon(1e-3));
  CHECK(twenty[1] == doctest::Approx(20.0));
  CHECK_THROWS_AS(alias_set(91.0, 1.0), ConfigError);
  CHECK_THROWS_AS(alias_set(0.0, 0.0), ConfigError);
}

TEST_CASE("spectrum peaks are strict local maxima") {
  CHECK(spectrum_peaks({0.1, 1.0, 0.2, 0.5, 0.4}, 0.3) == std::vector<std::size_t>{1, 3});
  CHECK(spectrum_peaks({0.9, 0.1, 0.1, 1.0}, 0.5) == std::vector<std::size_t>{0, 3});
  CHECK(spectrum_peaks({0.5, 0.5, 0.1}, 0.1).empty());
  CHECK(spectrum_peaks({}, 0.1).empty());
  CHECK(spectrum_peaks({0.0, 0.0}, 0.1).empty());
}

TEST_CASE("noise subspace is spanned by the smallest eigenvectors") {
  Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(4, 4);
  cov.diagonal() << 1.0, 3.0, 2.0, 0.0;
  const MusicSubspace sub = music_subspace(cov, 2);
  REQUIRE(sub.noise.cols() == 2);
  CHECK(sub.eigenvalues(0) == doctest::Approx(3.0));
  CHECK(sub.eigenvalues(3) == 0.0);
  // Noise columns live on axes 0 and 3.
  CHECK(sub.noise.row(1).norm() < 1e-12);
  CHECK(sub.noise.row(2).norm() < 1e-12);
  CHECK_THROWS_AS(music_subspace(cov, 4), ConfigError);
  CHECK_THROWS_AS(music_subspace(Eigen::MatrixXcd::Zero(3, 4), 1), DataError);
}

TEST_CASE("MUSIC recovers a synthetic direction and delay") {
  RadioConfig radio;
  radio.antenna_spacing_wavelengths = 0.5;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.05);
  const double f = radio.subcarrier_hz(10);
  const double kc = 2 * kPi * f / kSpeedOfLight;
  Eigen::MatrixXcd doa(3, 80);
  for (int m = 0; m < 3; ++m)
    for (int w = 0; w < 80; ++w)
      doa(m, w) = std::polar(1.0, -kc * m * radio.antenna_spacing_m() * std::sin(-41.0 * kPi / 180)) +
                  cd(n(rng), n(rng));
  const DoaSpectrum ds = music_doa(doa, f, radio);
  CHECK(ds.grid.size() == DoaSpectrum::kBins);
  CHECK(DoaSpectrum::theta_deg(ds.argmax()) == doctest::Approx(-41.0).epsilon(0.03));
  CHECK(*std::max_element(ds.grid.begin(), ds.grid.end()) == 1.0);

  Eigen::MatrixXcd tof(64, 80);
  for (int k = 0; k < 64; ++k)
    for (int w = 0; w < 80; ++w)
      tof(k, w) = std::polar(1.0, -2 * kPi * radio.subcarrier_hz(k) * 200e-9) + cd(n(rng), n(rng));
  const TofSpectrum ts = music_tof(tof, radio);
  CHECK(ts.tof_period_s == doctest::Approx(800e-9));
  CHECK(ts.argmax() == 64);
  CHECK(ts.tau_s(64) == doctest::Approx(200e-9));

  CHECK_THROWS_AS(music_doa(Eigen::MatrixXcd::Zero(3, 5), f, radio), ConfigError);
  CHECK_THROWS_AS(music_tof(Eigen::MatrixXcd::Zero(3, 80), radio), DataError);
}

TEST_CASE("a zero delay lands in the first ToF bin") {
  const RadioConfig radio;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> phase(0.0, 2 * kPi);
  // Same phase on every subcarrier, a fresh one per snapshot.
  Eigen::MatrixXcd data(64, 80);
  for (Eigen::Index w = 0; w < 80; ++w) data.col(w).setConstant(std::polar(1.0, phase(rng)));
  const TofSpectrum spec = music_tof(data, radio);
  const auto top = std::max_element(spec.grid.begin(), spec.grid.end()) - spec.grid.begin();
  CHECK(top == 0);
}

TEST_CASE("peak analysis estimates DoA and ToF of a simulated target") {
  SUBCASE("half-wavelength array needs no alias resolution") {
    const Scene s = scene(0.5, 1.3, 0.6, 25.0, 150e-9, 10.0);
    const auto est = analyze_peaks(s.stream, 0, {s.peak}, s.radio);
    REQUIRE(est.size() == 1);
    CHECK(est[0].resolution == DoaResolution::kNone);
    CHECK(est[0].point.phi_hat == doctest::Approx(25.0).epsilon(0.08));
    CHECK(std::abs(est[0].point.tau_hat - 150e-9) < 10e-9);
    CHECK(est[0].point.v_hat == 1.3);
    CHECK(est[0].ambiguous.v_hat_tag == 1.3);
  }
  SUBCASE("one-wavelength array resolves aliases across the band") {
    const Scene s = scene(1.0, -1.1, 0.2, -35.0, 300e-9, 10.0);
    const auto est = analyze_peaks(s.stream, 0, {s.peak}, s.radio);
    REQUIRE(est.size() == 1);
    CHECK(est[0].resolution == DoaResolution::kWideband);
    CHECK(est[0].point.phi_hat == doctest::Approx(-35.0).epsilon(0.08));
    CHECK(std::abs(est[0].point.tau_hat - 300e-9) < 10e-9);
  }
}

TEST_CASE("external clear spectra override the fallback") {
  const Scene s = scene(1.0, 1.3, 0.6, 25.0, 150e-9, 10.0);
  int calls = 0;
  const DoaDisambiguator fixed = [&](const std::vector<DoaSpectrum>& in) {
    ++calls;
    std::vector<DoaSpectrum> out(in.size());
    for (auto& d : out) {
      d.grid.assign(DoaSpectrum::kBins, 0.0);
      d.grid[90 + 60] = 1.0;
    }
    return out;
  };
  const auto points = estimate_parameters(s.stream, 0, {s.peak}, s.radio, {}, fixed);
  REQUIRE(points.size() == 1);
  CHECK(calls == 1);
  CHECK(points[0].phi_hat == 60.0);

  const Scene half = scene(0.5, 1.3, 0.6, 25.0, 150e-9, 10.0);
  const auto unchanged = estimate_parameters(half.stream, 0, {half.peak}, half.radio, {}, fixed);
  CHECK(calls == 1);
  CHECK(unchanged[0].phi_hat == doctest::Approx(25.0).epsilon(0.08));

  auto est = analyze_peaks(s.stream, 0, {s.peak}, s.radio);
  DoaSpectrum bad;
  bad.grid.assign(180, 0.0);
  CHECK_THROWS_AS(apply_clear_spectrum(est[0], bad), BoundaryError);
  CHECK_THROWS_AS(analyze_peaks(s.stream, 1, {s.peak}, s.radio), DataError);
}

}  // TEST_SUITE
