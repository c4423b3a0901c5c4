#pragma once

// Stratified splitting and classification metrics.
//
// Shuffles use splitmix64 driving Fisher-Yates: for i = n-1 down to 1,
// j = next() % (i + 1), swap(ids[i], ids[j]). Ids are sorted before shuffling
// and classes are visited in ascending label order with one generator seeded
// by the caller's seed, so the seed alone fixes the outcome.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "otdrimg/error.hpp"
#include "otdrimg/rng.hpp"

namespace otdrimg {

struct LabeledId {
  std::string id;
  int label = 0;
};

enum class Subset { Train, Val, Test };

[[nodiscard]] constexpr std::string_view to_string(Subset s) noexcept {
  switch (s) {
    case Subset::Train: return "train";
    case Subset::Val: return "val";
    case Subset::Test: return "test";
  }
  return "?";
}

struct HoldoutRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

/// Per-id subset or fold. Exactly one of the two maps is populated.
struct SplitAssignment {
  enum class Scheme { Holdout, KFold };
  Scheme scheme = Scheme::Holdout;
  std::uint64_t seed = 0;
  HoldoutRatios ratios;
  int folds = 0;
  std::map<std::string, Subset> subset;
  std::map<std::string, int> fold;

  /// Column value written to manifests: train/val/test or fold<k>.
  [[nodiscard]] std::string label_for(const std::string& id) const {
    if (scheme == Scheme::Holdout) {
      return std::string(to_string(subset.at(id)));
    }
    return "fold" + std::to_string(fold.at(id));
  }
};

namespace detail {

inline void fisher_yates(std::vector<std::string>& ids, SplitMix64& rng) {
  for (std::size_t i = ids.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next() % i);
    std::swap(ids[i - 1], ids[j]);
  }
}

// Ids per label, sorted, with duplicate detection.
[[nodiscard]] inline std::map<int, std::vector<std::string>> group_by_label(
    const std::vector<LabeledId>& items) {
  std::map<int, std::vector<std::string>> groups;
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (!seen.insert(item.id).second) {
      throw Error(Errc::Stratification, "duplicate sample id '" + item.id + "'");
    }
    groups[item.label].push_back(item.id);
  }
  for (auto& [label, ids] : groups) {
    std::sort(ids.begin(), ids.end());
  }
  return groups;
}

}  // namespace detail

/// Stratified train/val/test split. Within each class the shuffled ids are cut
/// at floor(n*train) and floor(n*(train+val)).
[[nodiscard]] inline SplitAssignment split_holdout(const std::vector<LabeledId>& items,
                                                   std::uint64_t seed,
                                                   const HoldoutRatios& ratios = {}) {
  if (!(ratios.train > 0.0 && ratios.val > 0.0 && ratios.test > 0.0) ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw Error(Errc::InvalidConfig, "holdout ratios must be positive and sum to 1");
  }
  if (items.empty()) {
    throw Error(Errc::Stratification, "no samples to split");
  }
  SplitAssignment out;
  out.scheme = SplitAssignment::Scheme::Holdout;
  out.seed = seed;
  out.ratios = ratios;
  SplitMix64 rng(seed);
  for (auto& [label, ids] : detail::group_by_label(items)) {
    detail::fisher_yates(ids, rng);
    const double n = static_cast<double>(ids.size());
    // The 1e-9 nudge keeps exact products such as 100 * 0.7 from flooring to 69.
    const auto cut1 = std::min(ids.size(), static_cast<std::size_t>(std::floor(n * ratios.train + 1e-9)));
    const auto cut2 = std::min(
        ids.size(), static_cast<std::size_t>(std::floor(n * (ratios.train + ratios.val) + 1e-9)));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out.subset[ids[i]] = i < cut1 ? Subset::Train : (i < cut2 ? Subset::Val : Subset::Test);
    }
  }
  return out;
}

/// Stratified k-fold. Within each class the shuffled ids are dealt round-robin;
/// the dealing position carries over between classes and starts at a
/// seed-chosen fold, so remainders do not pile onto fold 0.
[[nodiscard]] inline SplitAssignment split_kfold(const std::vector<LabeledId>& items, int k,
                                                 std::uint64_t seed) {
  if (k < 2) {
    throw Error(Errc::InvalidConfig, "k-fold needs k >= 2");
  }
  const auto groups = detail::group_by_label(items);
  if (groups.empty()) {
    throw Error(Errc::Stratification, "no samples to split");
  }
  for (const auto& [label, ids] : groups) {
    if (ids.size() < static_cast<std::size_t>(k)) {
      throw Error(Errc::Stratification, "class " + std::to_string(label) + " has " +
                                            std::to_string(ids.size()) + " samples, fewer than k=" +
                                            std::to_string(k));
    }
  }
  SplitAssignment out;
  out.scheme = SplitAssignment::Scheme::KFold;
  out.seed = seed;
  out.folds = k;
  SplitMix64 rng(seed);
  std::size_t position = static_cast<std::size_t>(rng.next() % static_cast<std::uint64_t>(k));
  for (auto [label, ids] : groups) {
    detail::fisher_yates(ids, rng);
    for (const auto& id : ids) {
      out.fold[id] = static_cast<int>(position % static_cast<std::size_t>(k));
      ++position;
    }
  }
  return out;
}

struct Prediction {
  std::string sample_id;
  int true_label = 0;
  int predicted_label = 0;
};

using PredictionSet = std::vector<Prediction>;

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
};

struct MetricsReport {
  std::int64_t count = 0;
  double accuracy = 0.0;
  double macro_sensitivity = 0.0;
  double macro_precision = 0.0;
  double macro_f1 = 0.0;
  double weighted_sensitivity = 0.0;
  double weighted_precision = 0.0;
  double weighted_f1 = 0.0;
  std::array<ClassMetrics, 6> per_class{};
  /// rows = true label, cols = predicted label
  std::array<std::array<std::int64_t, 6>, 6> confusion{};
};

namespace detail {

using u128 = unsigned __int128;

[[nodiscard]] inline u128 gcd128(u128 a, u128 b) noexcept {
  while (b != 0) {
    const u128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

[[nodiscard]] inline int bit_width128(u128 v) noexcept {
  int w = 0;
  while (v != 0) {
    v >>= 1;
    ++w;
  }
  return w;
}

/// num/den rounded once to the nearest double (ties to even). den > 0.
[[nodiscard]] inline double ratio_to_double(u128 num, u128 den) noexcept {
  if (num == 0) {
    return 0.0;
  }
  u128 m = num / den;
  u128 rem = num % den;
  int exp = 0;
  bool sticky = false;
  // Keep 54 bits: 53 significand bits and one guard bit.
  while (bit_width128(m) > 54) {
    sticky = sticky || (m & 1) != 0;
    m >>= 1;
    ++exp;
  }
  while (bit_width128(m) < 54) {
    rem <<= 1;
    m <<= 1;
    if (rem >= den) {
      rem -= den;
      m |= 1;
    }
    --exp;
  }
  sticky = sticky || rem != 0;
  const bool guard = (m & 1) != 0;
  m >>= 1;
  ++exp;
  if (guard && (sticky || (m & 1) != 0)) {
    ++m;
  }
  return std::ldexp(static_cast<double>(static_cast<std::uint64_t>(m)), exp);
}

/// Exact sum of non-negative fractions. Falls back to floating addition if the
/// reduced denominator would overflow 128 bits.
class ExactSum {
 public:
  void add(std::uint64_t num, std::uint64_t den) {
    approx_ += static_cast<double>(num) / static_cast<double>(den);
    if (overflow_ || num == 0) {
      return;
    }
    u128 n = num;
    u128 d = den;
    const u128 g0 = gcd128(n, d);
    n /= g0;
    d /= g0;
    const u128 g = gcd128(den_, d);
    const u128 scale_self = d / g;
    const u128 scale_other = den_ / g;
    u128 a = 0;
    u128 b = 0;
    u128 new_den = 0;
    if (__builtin_mul_overflow(num_, scale_self, &a) || __builtin_mul_overflow(n, scale_other, &b) ||
        __builtin_mul_overflow(den_, scale_self, &new_den) || a + b < a) {
      overflow_ = true;
      return;
    }
    num_ = a + b;
    den_ = new_den;
    const u128 r = gcd128(num_, den_);
    num_ /= r;
    den_ /= r;
  }

  /// The sum divided by `divisor`, correctly rounded.
  [[nodiscard]] double mean(std::uint64_t divisor) const noexcept {
    u128 den = 0;
    if (overflow_ || __builtin_mul_overflow(den_, static_cast<u128>(divisor), &den)) {
      return approx_ / static_cast<double>(divisor);
    }
    return ratio_to_double(num_, den);
  }

 private:
  u128 num_ = 0;
  u128 den_ = 1;
  double approx_ = 0.0;
  bool overflow_ = false;
};

}  // namespace detail

/// Accuracy plus macro/weighted sensitivity, precision and F1. Macro means are
/// unweighted over the classes present in the true labels. Every reported value
/// is the exact ratio of the underlying counts, rounded once to double.
[[nodiscard]] inline MetricsReport compute_metrics(const PredictionSet& preds) {
  if (preds.empty()) {
    throw Error(Errc::PredictionFormat, "prediction set is empty");
  }
  MetricsReport r;
  std::set<std::string> ids;
  for (const auto& p : preds) {
    if (p.true_label < 0 || p.true_label > 5 || p.predicted_label < 0 || p.predicted_label > 5) {
      throw Error(Errc::LabelRange, p.sample_id + ": labels must lie in 0..5");
    }
    if (!ids.insert(p.sample_id).second) {
      throw Error(Errc::PredictionFormat, "duplicate sample id '" + p.sample_id + "'");
    }
    ++r.confusion[static_cast<std::size_t>(p.true_label)][static_cast<std::size_t>(p.predicted_label)];
  }
  r.count = static_cast<std::int64_t>(preds.size());
  const auto n = static_cast<std::uint64_t>(r.count);
  std::int64_t correct = 0;
  for (std::size_t c = 0; c < 6; ++c) {
    correct += r.confusion[c][c];
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.count);

  std::uint64_t present = 0;
  detail::ExactSum macro_recall;
  detail::ExactSum macro_precision;
  detail::ExactSum macro_f1;
  detail::ExactSum weighted_recall;
  detail::ExactSum weighted_precision;
  detail::ExactSum weighted_f1;
  for (std::size_t c = 0; c < 6; ++c) {
    const auto tp = static_cast<std::uint64_t>(r.confusion[c][c]);
    std::uint64_t fn = 0;
    std::uint64_t fp = 0;
    for (std::size_t o = 0; o < 6; ++o) {
      if (o != c) {
        fn += static_cast<std::uint64_t>(r.confusion[c][o]);
        fp += static_cast<std::uint64_t>(r.confusion[o][c]);
      }
    }
    auto& m = r.per_class[c];
    const std::uint64_t support = tp + fn;
    m.support = static_cast<std::int64_t>(support);
    m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.recall = support == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(support);
    // 2PR/(P+R) reduces to 2TP/(2TP+FP+FN); zero whenever TP is zero.
    m.f1 = tp == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
    if (support == 0) {
      continue;
    }
    ++present;
    macro_recall.add(tp, support);
    weighted_recall.add(tp, n);
    if (tp > 0) {
      macro_precision.add(tp, tp + fp);
      macro_f1.add(2 * tp, 2 * tp + fp + fn);
      weighted_precision.add(support * tp, n * (tp + fp));
      weighted_f1.add(support * 2 * tp, n * (2 * tp + fp + fn));
    }
  }
  r.macro_sensitivity = macro_recall.mean(present);
  r.macro_precision = macro_precision.mean(present);
  r.macro_f1 = macro_f1.mean(present);
  r.weighted_sensitivity = weighted_recall.mean(1);
  r.weighted_precision = weighted_precision.mean(1);
  r.weighted_f1 = weighted_f1.mean(1);
  return r;
}

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

struct FoldAggregate {
  std::size_t folds = 0;
  MetricSummary accuracy;
  MetricSummary macro_sensitivity;
  MetricSummary macro_precision;
  MetricSummary macro_f1;
};

/// Mean and population standard deviation of each scalar metric.
[[nodiscard]] inline FoldAggregate aggregate_folds(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) {
    throw Error(Errc::InvalidConfig, "aggregate_folds needs at least one report");
  }
  const auto summarize = [&](auto field) {
    double sum = 0.0;
    for (const auto& r : reports) {
      sum += r.*field;
    }
    const double mean = sum / static_cast<double>(reports.size());
    double ss = 0.0;
    for (const auto& r : reports) {
      ss += (r.*field - mean) * (r.*field - mean);
    }
    return MetricSummary{mean, std::sqrt(ss / static_cast<double>(reports.size()))};
  };
  FoldAggregate a;
  a.folds = reports.size();
  a.accuracy = summarize(&MetricsReport::accuracy);
  a.macro_sensitivity = summarize(&MetricsReport::macro_sensitivity);
  a.macro_precision = summarize(&MetricsReport::macro_precision);
  a.macro_f1 = summarize(&MetricsReport::macro_f1);
  return a;
}

namespace detail {

[[nodiscard]] inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

[[nodiscard]] inline int parse_label(std::string_view text, std::size_t line_no) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw Error(Errc::PredictionFormat,
                "line " + std::to_string(line_no) + ": label '" + std::string(text) + "' is not an integer");
  }
  if (v < 0 || v > 5) {
    throw Error(Errc::LabelRange, "line " + std::to_string(line_no) + ": label " + std::to_string(v) +
                                      " outside 0..5");
  }
  return v;
}

}  // namespace detail

inline constexpr std::string_view kPredictionHeader = "sample_id,true_label,pred_label";

/// Reads a prediction CSV: header `sample_id,true_label,pred_label`, then one
/// row per sample.
[[nodiscard]] inline PredictionSet read_predictions(std::istream& in) {
  PredictionSet out;
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line_no == 1) {
      if (line != kPredictionHeader) {
        throw Error(Errc::PredictionFormat, "expected header '" + std::string(kPredictionHeader) +
                                                "', got '" + line + "'");
      }
      continue;
    }
    if (line.empty()) {
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw Error(Errc::PredictionFormat, "line " + std::to_string(line_no) + ": expected 3 fields");
    }
    Prediction p;
    p.sample_id = line.substr(0, c1);
    p.true_label = detail::parse_label(std::string_view(line).substr(c1 + 1, c2 - c1 - 1), line_no);
    p.predicted_label = detail::parse_label(std::string_view(line).substr(c2 + 1), line_no);
    if (p.sample_id.empty() || !ids.insert(p.sample_id).second) {
      throw Error(Errc::PredictionFormat,
                  "line " + std::to_string(line_no) + ": empty or duplicate sample id");
    }
    out.push_back(std::move(p));
  }
  if (line_no == 0) {
    throw Error(Errc::PredictionFormat, "prediction file is empty");
  }
  return out;
}

inline void write_predictions(std::ostream& out, const PredictionSet& preds) {
  out << kPredictionHeader << '\n';
  for (const auto& p : preds) {
    out << p.sample_id << ',' << p.true_label << ',' << p.predicted_label << '\n';
  }
}

/// Flat `key=value` document, one pair per line. Keys:
///   count, accuracy, macro_sensitivity, macro_precision, macro_f1,
///   weighted_sensitivity, weighted_precision, weighted_f1,
///   class<c>.precision / .recall / .f1 / .support   for c in 0..5
///   confusion.<t>   six space-separated counts for true label t
inline void write_metrics_report(std::ostream& out, const MetricsReport& r) {
  using detail::format_double;
  out << "count=" << r.count << '\n';
  out << "accuracy=" << format_double(r.accuracy) << '\n';
  out << "macro_sensitivity=" << format_double(r.macro_sensitivity) << '\n';
  out << "macro_precision=" << format_double(r.macro_precision) << '\n';
  out << "macro_f1=" << format_double(r.macro_f1) << '\n';
  out << "weighted_sensitivity=" << format_double(r.weighted_sensitivity) << '\n';
  out << "weighted_precision=" << format_double(r.weighted_precision) << '\n';
  out << "weighted_f1=" << format_double(r.weighted_f1) << '\n';
  for (std::size_t c = 0; c < 6; ++c) {
    const auto& m = r.per_class[c];
    out << "class" << c << ".precision=" << format_double(m.precision) << '\n';
    out << "class" << c << ".recall=" << format_double(m.recall) << '\n';
    out << "class" << c << ".f1=" << format_double(m.f1) << '\n';
    out << "class" << c << ".support=" << m.support << '\n';
  }
  for (std::size_t t = 0; t < 6; ++t) {
    out << "confusion." << t << '=';
    for (std::size_t p = 0; p < 6; ++p) {
      out << (p > 0 ? " " : "") << r.confusion[t][p];
    }
    out << '\n';
  }
}

/// Parses the key=value document back into a map; unknown keys are kept.
[[nodiscard]] inline std::map<std::string, std::string> read_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      continue;
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

inline void write_fold_aggregate(std::ostream& out, const FoldAggregate& a) {
  using detail::format_double;
  out << "folds=" << a.folds << '\n';
  const auto emit = [&](std::string_view key, const MetricSummary& s) {
    out << key << ".mean=" << format_double(s.mean) << '\n';
    out << key << ".std=" << format_double(s.stddev) << '\n';
  };
  emit("accuracy", a.accuracy);
  emit("macro_sensitivity", a.macro_sensitivity);
  emit("macro_precision", a.macro_precision);
  emit("macro_f1", a.macro_f1);
}

}  // namespace otdrimg
