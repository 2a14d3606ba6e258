#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace optsurr {

struct TrialRecord {
  double y = 0.0;
  double s = 0.0;
  int a = 0;
};

// Validated two-arm sample, immutable once built. Records keep their input
// order because influence values are indexed by position.
class TrialDataset {
 public:
  TrialDataset() = default;
  TrialDataset(std::vector<double> y, std::vector<double> s, std::vector<int> a);
  static TrialDataset from_records(std::span<const TrialRecord> records);

  std::size_t n() const noexcept { return y_.size(); }
  std::size_t n0() const noexcept { return n0_; }
  std::size_t n1() const noexcept { return n1_; }
  std::size_t arm_count(int arm) const noexcept { return arm == 1 ? n1_ : n0_; }

  std::span<const double> y() const noexcept { return y_; }
  std::span<const double> s() const noexcept { return s_; }
  std::span<const int> a() const noexcept { return a_; }
  TrialRecord record(std::size_t i) const { return {y_[i], s_[i], a_[i]}; }

  // Records at the given positions, in the given order; validated like any dataset.
  TrialDataset subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<double> y_;
  std::vector<double> s_;
  std::vector<int> a_;
  std::size_t n0_ = 0;
  std::size_t n1_ = 0;
};

enum class Field { y, s };

std::vector<double> arm_values(const TrialDataset& data, int arm, Field field);

struct ColumnMap {
  std::string y = "y";
  std::string s = "s";
  std::string a = "a";
};

enum class MissingPolicy { strict, lenient };

struct LoadResult {
  TrialDataset dataset;
  std::size_t dropped_rows = 0;
};

LoadResult load_dataset(std::istream& in, const ColumnMap& columns = {},
                        MissingPolicy policy = MissingPolicy::strict);
LoadResult load_dataset_file(const std::string& path, const ColumnMap& columns = {},
                             MissingPolicy policy = MissingPolicy::strict);

// Writes a header plus one row per record with round-trip precision.
void write_csv(std::ostream& out, const TrialDataset& data, const ColumnMap& columns = {});

enum class BandwidthRule { scott_undersmoothed, fixed };

struct AnalysisConfig {
  BandwidthRule bandwidth_rule = BandwidthRule::scott_undersmoothed;
  double fixed_bandwidth = 0.0;       // used when bandwidth_rule == fixed
  double c0 = 0.06;                   // undersmoothing exponent
  std::size_t grid_points = 512;
  double support_trim = 0.0;
  double density_floor_rel = 1e-4;    // floor = density_floor_rel * max f1-hat
  std::size_t resample_count = 500;   // B
  std::size_t cv_folds = 2;           // K
  double critical_z = 1.96;
  double alpha = 0.05;
  std::uint64_t seed = 20240601;
  std::size_t min_fold_arm = 50;
  double exclusion_cap = 0.02;
  double null_effect_threshold = 1.0;
  std::vector<std::size_t> n_bars = {50, 100, 150};

  void validate() const;
};

}  // namespace optsurr
