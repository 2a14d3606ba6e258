#include "optsurr/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "optsurr/errors.hpp"

namespace optsurr {

TrialDataset::TrialDataset(std::vector<double> y, std::vector<double> s, std::vector<int> a)
    : y_(std::move(y)), s_(std::move(s)), a_(std::move(a)) {
  if (y_.size() != s_.size() || y_.size() != a_.size()) {
    throw Error(ErrorCode::MalformedInput, "y, s and a must have equal length");
  }
  for (std::size_t i = 0; i < y_.size(); ++i) {
    if (a_[i] != 0 && a_[i] != 1) {
      throw Error(ErrorCode::NonBinaryArm, "row " + std::to_string(i + 1) + " has a=" + std::to_string(a_[i]));
    }
    if (!std::isfinite(y_[i])) throw Error(ErrorCode::NonFiniteValue, "row " + std::to_string(i + 1) + " field y");
    if (!std::isfinite(s_[i])) throw Error(ErrorCode::NonFiniteValue, "row " + std::to_string(i + 1) + " field s");
    (a_[i] == 1 ? n1_ : n0_)++;
  }
  if (n0_ < 2) throw Error(ErrorCode::ArmTooSmall, "arm 0 has " + std::to_string(n0_) + " records");
  if (n1_ < 2) throw Error(ErrorCode::ArmTooSmall, "arm 1 has " + std::to_string(n1_) + " records");
}

TrialDataset TrialDataset::from_records(std::span<const TrialRecord> records) {
  std::vector<double> y, s;
  std::vector<int> a;
  y.reserve(records.size());
  s.reserve(records.size());
  a.reserve(records.size());
  for (const auto& r : records) {
    y.push_back(r.y);
    s.push_back(r.s);
    a.push_back(r.a);
  }
  return TrialDataset(std::move(y), std::move(s), std::move(a));
}

TrialDataset TrialDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<double> y, s;
  std::vector<int> a;
  y.reserve(indices.size());
  s.reserve(indices.size());
  a.reserve(indices.size());
  for (std::size_t i : indices) {
    y.push_back(y_.at(i));
    s.push_back(s_[i]);
    a.push_back(a_[i]);
  }
  return TrialDataset(std::move(y), std::move(s), std::move(a));
}

std::vector<double> arm_values(const TrialDataset& data, int arm, Field field) {
  std::vector<double> out;
  out.reserve(data.arm_count(arm));
  const auto src = field == Field::y ? data.y() : data.s();
  const auto a = data.a();
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (a[i] == arm) out.push_back(src[i]);
  }
  return out;
}

namespace {

// Splits one CSV record, honouring double-quoted fields with "" escapes.
// Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0;; ++i) {
    if (i == line.size()) {
      if (quoted && std::getline(in, line)) {
        field.push_back('\n');
        i = static_cast<std::size_t>(-1);
        continue;
      }
      break;
    }
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (!field.empty() && field.back() == '\r') field.pop_back();
  fields.push_back(std::move(field));
  return true;
}

std::string trim(std::string_view v) {
  const auto b = v.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = v.find_last_not_of(" \t");
  return std::string(v.substr(b, e - b + 1));
}

bool is_missing(const std::string& v) { return v.empty() || v == "NA"; }

double parse_real(const std::string& text, std::size_t row, const char* field) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw Error(ErrorCode::NonFiniteValue,
                "row " + std::to_string(row) + " field " + field + " value '" + text + "'");
  }
  return value;
}

}  // namespace

LoadResult load_dataset(std::istream& in, const ColumnMap& columns, MissingPolicy policy) {
  std::vector<std::string> fields;
  if (!read_record(in, fields)) throw Error(ErrorCode::MalformedInput, "empty input, header row expected");
  if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);

  auto locate = [&](const std::string& name) {
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (trim(fields[j]) == name) return j;
    }
    throw Error(ErrorCode::MissingColumn, name);
  };
  const std::size_t iy = locate(columns.y);
  const std::size_t is = locate(columns.s);
  const std::size_t ia = locate(columns.a);
  const std::size_t width = fields.size();

  std::vector<double> y, s;
  std::vector<int> a;
  LoadResult result;
  std::size_t row = 0;
  while (read_record(in, fields)) {
    ++row;
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;  // blank line
    if (fields.size() != width) {
      throw Error(ErrorCode::MalformedInput, "row " + std::to_string(row) + " has " +
                                                 std::to_string(fields.size()) + " fields, expected " +
                                                 std::to_string(width));
    }
    const std::string fy = trim(fields[iy]), fs = trim(fields[is]), fa = trim(fields[ia]);
    const char* missing = is_missing(fy) ? "y" : is_missing(fs) ? "s" : is_missing(fa) ? "a" : nullptr;
    if (missing) {
      if (policy == MissingPolicy::strict) {
        throw Error(ErrorCode::MissingValue, "row " + std::to_string(row) + " field " + missing);
      }
      ++result.dropped_rows;
      continue;
    }
    const double arm = parse_real(fa, row, "a");
    if (arm != 0.0 && arm != 1.0) {
      throw Error(ErrorCode::NonBinaryArm, "row " + std::to_string(row) + " has a=" + fa);
    }
    y.push_back(parse_real(fy, row, "y"));
    s.push_back(parse_real(fs, row, "s"));
    a.push_back(static_cast<int>(arm));
  }
  result.dataset = TrialDataset(std::move(y), std::move(s), std::move(a));
  return result;
}

LoadResult load_dataset_file(const std::string& path, const ColumnMap& columns, MissingPolicy policy) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MalformedInput, "cannot open '" + path + "'");
  return load_dataset(in, columns, policy);
}

void write_csv(std::ostream& out, const TrialDataset& data, const ColumnMap& columns) {
  out << columns.y << ',' << columns.s << ',' << columns.a << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < data.n(); ++i) {
    out << data.y()[i] << ',' << data.s()[i] << ',' << data.a()[i] << '\n';
  }
}

void AnalysisConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (!(support_trim >= 0.0 && support_trim < 0.5)) fail("support_trim must lie in [0, 0.5)");
  if (grid_points < 16) fail("grid_points must be at least 16");
  if (cv_folds < 2) fail("cv_folds must be at least 2");
  if (resample_count < 2) fail("resample_count must be at least 2");
  if (!(c0 >= 0.0)) fail("c0 must be nonnegative");
  if (bandwidth_rule == BandwidthRule::fixed && !(fixed_bandwidth > 0.0)) fail("fixed bandwidth must be positive");
  if (!(density_floor_rel > 0.0)) fail("density floor must be positive");
  if (!(critical_z > 0.0)) fail("critical_z must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0, 1)");
  if (!(exclusion_cap >= 0.0 && exclusion_cap < 1.0)) fail("exclusion_cap must lie in [0, 1)");
  for (auto nb : n_bars) {
    if (nb < 1) fail("n_bar values must be at least 1");
  }
}

}  // namespace optsurr
