#pragma once

// Series-to-matrix encodings: min-max rescale, polar angles, Gramian angular
// summation/difference fields, recurrence plots and PAA downsampling.
//
// All functions are pure; every type is immutable once built and can be shared
// across threads freely.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "otdrimg/error.hpp"
#include "otdrimg/rng.hpp"

namespace otdrimg {

/// Raw intensity series, at least two finite samples.
class TimeSeries {
 public:
  explicit TimeSeries(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) {
      throw Error(Errc::InvalidSeries,
                  "series needs at least 2 points, got " + std::to_string(values_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw Error(Errc::InvalidSeries, "non-finite value at index " + std::to_string(i));
      }
    }
  }

  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const noexcept { return values_[i]; }

 private:
  std::vector<double> values_;
};

/// Series with every element in [-1, 1].
class NormalizedSeries {
 public:
  explicit NormalizedSeries(std::vector<double> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!(values_[i] >= -1.0 && values_[i] <= 1.0)) {
        throw Error(Errc::InvalidSeries,
                    "normalized value outside [-1,1] at index " + std::to_string(i));
      }
    }
  }

  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const noexcept { return values_[i]; }

 private:
  std::vector<double> values_;
};

/// Polar angles in [0, pi].
class AngularSeries {
 public:
  explicit AngularSeries(std::vector<double> angles) : angles_(std::move(angles)) {
    for (std::size_t i = 0; i < angles_.size(); ++i) {
      if (!(angles_[i] >= 0.0 && angles_[i] <= std::numbers::pi)) {
        throw Error(Errc::InvalidSeries, "angle outside [0,pi] at index " + std::to_string(i));
      }
    }
  }

  [[nodiscard]] std::span<const double> angles() const noexcept { return angles_; }
  [[nodiscard]] std::size_t size() const noexcept { return angles_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const noexcept { return angles_[i]; }

 private:
  std::vector<double> angles_;
};

enum class EncodingKind { GASF, GADF, RP };

[[nodiscard]] constexpr const char* to_string(EncodingKind kind) noexcept {
  switch (kind) {
    case EncodingKind::GASF: return "GASF";
    case EncodingKind::GADF: return "GADF";
    case EncodingKind::RP: return "RP";
  }
  return "?";
}

/// Dense row-major square matrix tagged with the encoding that produced it.
class EncodingMatrix {
 public:
  EncodingMatrix(std::size_t n, EncodingKind kind, std::vector<double> entries)
      : n_(n), kind_(kind), entries_(std::move(entries)) {
    if (entries_.size() != n_ * n_) {
      throw Error(Errc::InvalidSeries, "encoding matrix entry count does not match n*n");
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] EncodingKind kind() const noexcept { return kind_; }
  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const noexcept {
    return entries_[i * n_ + j];
  }
  [[nodiscard]] std::span<const double> entries() const noexcept { return entries_; }

 private:
  std::size_t n_;
  EncodingKind kind_;
  std::vector<double> entries_;
};

/// Plain row-major real matrix, used for Gram products.
struct RealMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  [[nodiscard]] double operator()(std::size_t r, std::size_t c) const noexcept {
    return data[r * cols + c];
  }
};

struct PercentileThreshold {
  double percentile = 10.0;
};

struct FixedThreshold {
  double epsilon = 0.0;
};

/// How the recurrence threshold is chosen. Defaults to the 10th percentile of
/// off-diagonal pairwise distances.
class RpConfig {
 public:
  RpConfig() = default;

  static RpConfig percentile(double p) {
    if (!(p > 0.0 && p < 100.0)) {
      throw Error(Errc::InvalidConfig, "RP percentile must lie in (0,100), got " + std::to_string(p));
    }
    RpConfig c;
    c.policy_ = PercentileThreshold{p};
    return c;
  }

  static RpConfig fixed(double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw Error(Errc::InvalidConfig, "RP epsilon must be positive, got " + std::to_string(epsilon));
    }
    RpConfig c;
    c.policy_ = FixedThreshold{epsilon};
    return c;
  }

  [[nodiscard]] const std::variant<PercentileThreshold, FixedThreshold>& policy() const noexcept {
    return policy_;
  }

  [[nodiscard]] std::string describe() const {
    if (const auto* p = std::get_if<PercentileThreshold>(&policy_)) {
      return "percentile(" + std::to_string(p->percentile) + ")";
    }
    return "fixed(" + std::to_string(std::get<FixedThreshold>(policy_).epsilon) + ")";
  }

 private:
  std::variant<PercentileThreshold, FixedThreshold> policy_{PercentileThreshold{}};
};

/// Maps the series affinely onto [-1, 1]. A constant series maps to all zeros.
[[nodiscard]] inline NormalizedSeries rescale_minmax(const TimeSeries& series) {
  const auto values = series.values();
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(values.size(), 0.0);
  if (hi > lo) {
    const double span = hi - lo;
    for (std::size_t i = 0; i < values.size(); ++i) {
      out[i] = std::clamp(2.0 * (values[i] - lo) / span - 1.0, -1.0, 1.0);
    }
  }
  return NormalizedSeries(std::move(out));
}

/// arccos of each value, clamped into [-1, 1] first.
[[nodiscard]] inline AngularSeries to_polar(std::span<const double> values) {
  std::vector<double> angles(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    angles[i] = std::acos(std::clamp(values[i], -1.0, 1.0));
  }
  return AngularSeries(std::move(angles));
}

[[nodiscard]] inline AngularSeries to_polar(const NormalizedSeries& series) {
  return to_polar(series.values());
}

/// GASF[i][j] = cos(theta_i + theta_j). Evaluated through the angle-sum
/// expansion so only O(n) trig calls are needed; the upper triangle is mirrored.
[[nodiscard]] inline EncodingMatrix gasf(const AngularSeries& angles) {
  const std::size_t n = angles.size();
  std::vector<double> c(n);
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = std::cos(angles[i]);
    s[i] = std::sin(angles[i]);
  }
  std::vector<double> m(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = std::clamp(c[i] * c[j] - s[i] * s[j], -1.0, 1.0);
      m[i * n + j] = v;
      m[j * n + i] = v;
    }
  }
  return EncodingMatrix(n, EncodingKind::GASF, std::move(m));
}

/// GADF[i][j] = sin(theta_i - theta_j). Antisymmetric by construction with an
/// exact zero diagonal.
[[nodiscard]] inline EncodingMatrix gadf(const AngularSeries& angles) {
  const std::size_t n = angles.size();
  std::vector<double> c(n);
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = std::cos(angles[i]);
    s[i] = std::sin(angles[i]);
  }
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::clamp(s[i] * c[j] - c[i] * s[j], -1.0, 1.0);
      m[i * n + j] = v;
      m[j * n + i] = -v;
    }
  }
  return EncodingMatrix(n, EncodingKind::GADF, std::move(m));
}

/// G = X^T X for a column stack X (rows x cols, row-major). G[i][j] is the inner
/// product of columns i and j.
[[nodiscard]] inline RealMatrix gram_matrix(const RealMatrix& x) {
  for (double v : x.data) {
    if (!std::isfinite(v)) {
      throw Error(Errc::InvalidSeries, "gram_matrix input contains non-finite values");
    }
  }
  RealMatrix g{x.cols, x.cols, std::vector<double>(x.cols * x.cols, 0.0)};
  for (std::size_t i = 0; i < x.cols; ++i) {
    for (std::size_t j = i; j < x.cols; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < x.rows; ++r) {
        acc += x(r, i) * x(r, j);
      }
      g.data[i * x.cols + j] = acc;
      g.data[j * x.cols + i] = acc;
    }
  }
  return g;
}

/// Linear-interpolated percentile (p in [0,100]) of an unsorted sample.
/// The input is reordered in place.
[[nodiscard]] inline double percentile_linear(std::vector<double>& sample, double p) {
  if (sample.empty()) {
    return 0.0;
  }
  const double rank = p / 100.0 * static_cast<double>(sample.size() - 1);
  const auto lo_index = static_cast<std::size_t>(std::floor(rank));
  const double frac = rank - static_cast<double>(lo_index);
  auto lo_it = sample.begin() + static_cast<std::ptrdiff_t>(lo_index);
  std::nth_element(sample.begin(), lo_it, sample.end());
  const double lo = *lo_it;
  if (frac == 0.0 || lo_index + 1 >= sample.size()) {
    return lo;
  }
  const double hi = *std::min_element(lo_it + 1, sample.end());
  return lo + frac * (hi - lo);
}

/// Threshold the recurrence plot will use for this series under the config.
[[nodiscard]] inline double resolve_rp_threshold(std::span<const double> values,
                                                 const RpConfig& config) {
  if (const auto* fixed = std::get_if<FixedThreshold>(&config.policy())) {
    return fixed->epsilon;
  }
  const double p = std::get<PercentileThreshold>(config.policy()).percentile;
  const std::size_t n = values.size();
  std::vector<double> distances;
  distances.reserve(n * (n - 1) / 2);
  double smallest_positive = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::abs(values[i] - values[j]);
      distances.push_back(d);
      if (d > 0.0 && (smallest_positive == 0.0 || d < smallest_positive)) {
        smallest_positive = d;
      }
    }
  }
  if (smallest_positive == 0.0) {
    return 1.0;  // constant series: every distance is 0, any positive threshold works
  }
  const double eps = percentile_linear(distances, p);
  return eps > 0.0 ? eps : smallest_positive;
}

/// Binary recurrence matrix: R[i][j] = 1 iff |x_i - x_j| < epsilon.
[[nodiscard]] inline EncodingMatrix recurrence_plot(const NormalizedSeries& series,
                                                    const RpConfig& config = {}) {
  const auto values = series.values();
  const std::size_t n = values.size();
  const double eps = resolve_rp_threshold(values, config);
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    m[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::abs(values[i] - values[j]) < eps ? 1.0 : 0.0;
      m[i * n + j] = v;
      m[j * n + i] = v;
    }
  }
  return EncodingMatrix(n, EncodingKind::RP, std::move(m));
}

/// Piecewise aggregate approximation to m segments. Segment k averages
/// [floor(k*n/m), floor((k+1)*n/m)).
[[nodiscard]] inline std::vector<double> paa(std::span<const double> values, std::size_t m) {
  const std::size_t n = values.size();
  if (m == 0 || m > n) {
    throw Error(Errc::InvalidDownsample,
                "PAA length " + std::to_string(m) + " invalid for series of length " +
                    std::to_string(n));
  }
  std::vector<double> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t begin = k * n / m;
    const std::size_t end = (k + 1) * n / m;
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      acc += values[i];
    }
    out[k] = acc / static_cast<double>(end - begin);
  }
  return out;
}

[[nodiscard]] inline TimeSeries paa(const TimeSeries& series, std::size_t m) {
  if (m == series.size()) {
    return series;
  }
  auto out = paa(series.values(), m);
  if (out.size() < 2) {
    // A single segment mean is available through the span overload.
    throw Error(Errc::InvalidDownsample, "a TimeSeries needs at least 2 points after PAA");
  }
  return TimeSeries(std::move(out));
}

struct SinusoidSpec {
  double amplitude = 4.0;
  double frequency_hz = 6.0;
  double duration_s = 1.0;
  double sample_rate_hz = 1000.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// A*sin(2*pi*f*t/fs) plus seeded gaussian noise, round(duration*fs) samples.
[[nodiscard]] inline TimeSeries generate_sinusoid(const SinusoidSpec& spec) {
  const bool finite = std::isfinite(spec.amplitude) && std::isfinite(spec.frequency_hz) &&
                      std::isfinite(spec.duration_s) && std::isfinite(spec.sample_rate_hz) &&
                      std::isfinite(spec.noise_sigma);
  if (!finite || !(spec.duration_s > 0.0) || !(spec.sample_rate_hz > 2.0 * spec.frequency_hz) ||
      spec.frequency_hz < 0.0 || spec.noise_sigma < 0.0) {
    throw Error(Errc::InvalidSignalSpec,
                "need duration > 0, sample_rate > 2*frequency, noise_sigma >= 0");
  }
  const auto count = static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate_hz));
  if (count < 2) {
    throw Error(Errc::InvalidSignalSpec, "signal shorter than 2 samples");
  }
  SplitMix64 rng(spec.seed);
  std::vector<double> values(count);
  const double step = 2.0 * std::numbers::pi * spec.frequency_hz / spec.sample_rate_hz;
  for (std::size_t t = 0; t < count; ++t) {
    values[t] = spec.amplitude * std::sin(step * static_cast<double>(t));
    if (spec.noise_sigma > 0.0) {
      values[t] += spec.noise_sigma * rng.gaussian();
    }
  }
  return TimeSeries(std::move(values));
}

}  // namespace otdrimg
