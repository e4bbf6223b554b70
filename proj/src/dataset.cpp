// SPDX-License-Identifier: Apache-2.0
#include "qrv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "qrv/errors.hpp"

namespace qrv::data {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row
};

Csv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  Csv csv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (csv.header.empty()) {
      csv.header = std::move(fields);
    } else {
      if (fields.size() != csv.header.size()) {
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": expected " + std::to_string(csv.header.size()) +
                        " fields, found " + std::to_string(fields.size()));
      }
      csv.rows.push_back(std::move(fields));
      csv.lines.push_back(line_no);
    }
  }
  if (csv.header.empty()) throw DataError(path + ": empty file");
  return csv;
}

double parse_double(const std::string& s, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw DataError(context + ": cannot parse number '" + s + "'");
  }
  return v;
}

struct Date {
  int year;
  int month;
  int day;
};

Date parse_iso_date(const std::string& s, const std::string& context) {
  Date d{};
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' ||
      std::sscanf(s.c_str(), "%4d-%2d-%2d", &d.year, &d.month, &d.day) != 3) {
    throw DataError(context + ": cannot parse ISO date '" + s + "'");
  }
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) {
    throw DataError(context + ": date out of range '" + s + "'");
  }
  return d;
}

std::size_t find_column(const std::vector<std::string>& header,
                        const std::string& name, const std::string& path) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw DataError(path + ": missing required column '" + name + "'");
}

void format_17g(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

std::int64_t month_serial(int year, int month) {
  return static_cast<std::int64_t>(year) * 12 + (month - 1);
}

std::string month_label(std::int64_t serial) {
  const auto year = static_cast<int>(serial / 12);
  const auto month = static_cast<int>(serial % 12) + 1;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
  return buf;
}

std::string month_first_day(std::int64_t serial) {
  return month_label(serial) + "-01";
}

bool FeatureFrame::has_column(const std::string& name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::size_t FeatureFrame::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw ConfigError("frame has no column named '" + name + "'");
}

const std::vector<double>& FeatureFrame::col(const std::string& name) const {
  return data[column_index(name)];
}

double FeatureFrame::at(std::size_t row, const std::string& name) const {
  return data[column_index(name)][row];
}

MonthlySeries compute_monthly_log_rv(const std::vector<DailyReturn>& daily,
                                     std::vector<std::string>* warnings) {
  if (daily.empty()) throw DataError("daily return series is empty");
  MonthlySeries out;
  std::int64_t current = month_serial(daily.front().year, daily.front().month);
  double sum_sq = 0.0;
  std::size_t count = 0;

  auto flush = [&](std::int64_t month) {
    if (count == 0) return;
    if (sum_sq == 0.0) {
      throw DataError("realized volatility is exactly zero in " +
                      month_label(month) + "; log RV undefined");
    }
    if (count < 5 && warnings) {
      warnings->push_back("month " + month_label(month) + " has only " +
                          std::to_string(count) + " trading days");
    }
    out.months.push_back(month);
    out.values.push_back(std::log(std::sqrt(sum_sq)));
    sum_sq = 0.0;
    count = 0;
  };

  for (const auto& rec : daily) {
    if (!std::isfinite(rec.value)) {
      throw DataError("non-finite return on " + month_label(month_serial(
                          rec.year, rec.month)));
    }
    const std::int64_t m = month_serial(rec.year, rec.month);
    if (m != current) {
      flush(current);
      if (warnings && m > current + 1) {
        warnings->push_back("no trading data between " + month_label(current) +
                            " and " + month_label(m));
      }
      current = m;
    }
    sum_sq += rec.value * rec.value;
    ++count;
  }
  flush(current);
  return out;
}

RvAggregates derive_rv_aggregates(const std::vector<double>& log_rv) {
  RvAggregates out;
  out.rvq.resize(log_rv.size());
  out.rva.resize(log_rv.size());
  double sum3 = 0.0;
  double sum12 = 0.0;
  for (std::size_t t = 0; t < log_rv.size(); ++t) {
    sum3 += log_rv[t];
    sum12 += log_rv[t];
    if (t >= 3) sum3 -= log_rv[t - 3];
    if (t >= 12) sum12 -= log_rv[t - 12];
    const auto n3 = static_cast<double>(std::min<std::size_t>(t + 1, 3));
    const auto n12 = static_cast<double>(std::min<std::size_t>(t + 1, 12));
    out.rvq[t] = sum3 / n3;
    out.rva[t] = sum12 / n12;
  }
  return out;
}

double AngleScaler::transform(std::size_t feature_idx, double value) const {
  const auto [lo, hi] = min_max[feature_idx];
  if (!(hi > lo)) return 0.0;  // constant feature carries no information
  const double a = -kPi + 2.0 * kPi * (value - lo) / (hi - lo);
  return std::clamp(a, -kPi, kPi);
}

double AngleScaler::inverse(std::size_t feature_idx, double angle) const {
  const auto [lo, hi] = min_max[feature_idx];
  if (!(hi > lo)) return lo;
  return lo + (angle + kPi) * (hi - lo) / (2.0 * kPi);
}

AngleScaler fit_scaler(const FeatureFrame& frame, std::size_t begin,
                       std::size_t end,
                       const std::vector<std::string>& features) {
  if (begin >= end || end > frame.rows()) {
    throw ArgumentError("scaler training span is empty or out of range");
  }
  AngleScaler scaler;
  scaler.features = features;
  for (const auto& name : features) {
    const auto& column = frame.col(name);
    double lo = column[begin];
    double hi = column[begin];
    for (std::size_t i = begin; i < end; ++i) {
      lo = std::min(lo, column[i]);
      hi = std::max(hi, column[i]);
    }
    scaler.min_max.emplace_back(lo, hi);
  }
  return scaler;
}

std::vector<Window> rolling_windows(const RollingPlan& plan) {
  if (plan.total_length <= plan.n_out_of_sample + plan.lag_depth + 13) {
    throw PlanError("rolling plan infeasible: need total > oos + lag + 13");
  }
  const std::size_t width = plan.window_width();
  std::vector<Window> out;
  out.reserve(plan.n_out_of_sample);
  for (std::size_t i = 0; i < plan.n_out_of_sample; ++i) {
    out.push_back(Window{i, i + width, i + width});
  }
  return out;
}

std::vector<DailyReturn> load_daily(const std::string& path) {
  const Csv csv = read_csv(path);
  const std::size_t date_col = find_column(csv.header, "date", path);
  const std::size_t ret_col = find_column(csv.header, "return", path);
  std::vector<DailyReturn> out;
  out.reserve(csv.rows.size());
  std::int64_t prev_key = -1;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const std::string ctx = path + ":" + std::to_string(csv.lines[r]);
    const Date d = parse_iso_date(csv.rows[r][date_col], ctx);
    const double v = parse_double(csv.rows[r][ret_col], ctx);
    if (!std::isfinite(v)) throw DataError(ctx + ": non-finite return");
    const std::int64_t key = (month_serial(d.year, d.month) << 6) | d.day;
    if (key <= prev_key) {
      throw DataError(ctx + ": dates must be strictly increasing");
    }
    prev_key = key;
    out.push_back(DailyReturn{d.year, d.month, d.day, v});
  }
  if (out.empty()) throw DataError(path + ": no data rows");
  return out;
}

ExoTable load_exo_csv(const std::string& path) {
  const Csv csv = read_csv(path);
  const std::size_t date_col = find_column(csv.header, "date", path);
  ExoTable out;
  out.columns = exogenous_columns();
  std::vector<std::size_t> col_idx;
  for (const auto& name : out.columns) {
    col_idx.push_back(find_column(csv.header, name, path));
  }
  out.data.resize(out.columns.size());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const std::string ctx = path + ":" + std::to_string(csv.lines[r]);
    const Date d = parse_iso_date(csv.rows[r][date_col], ctx);
    if (d.day != 1) {
      throw DataError(ctx + ": monthly dates must fall on the first of month");
    }
    const std::int64_t m = month_serial(d.year, d.month);
    if (!out.months.empty()) {
      if (m == out.months.back()) {
        throw DataError(ctx + ": duplicated month " + month_label(m));
      }
      if (m != out.months.back() + 1) {
        throw DataError(ctx + ": month gap between " +
                        month_label(out.months.back()) + " and " +
                        month_label(m));
      }
    }
    out.months.push_back(m);
    for (std::size_t c = 0; c < out.columns.size(); ++c) {
      const double v = parse_double(csv.rows[r][col_idx[c]], ctx);
      if (!std::isfinite(v)) {
        throw DataError(ctx + ": non-finite value in column " + out.columns[c]);
      }
      out.data[c].push_back(v);
    }
  }
  if (out.months.empty()) throw DataError(path + ": no data rows");
  return out;
}

FeatureFrame assemble_frame(const MonthlySeries& log_rv, const ExoTable& exo) {
  for (std::size_t i = 1; i < log_rv.months.size(); ++i) {
    if (log_rv.months[i] != log_rv.months[i - 1] + 1) {
      throw DataError("realized volatility series has a gap between " +
                      month_label(log_rv.months[i - 1]) + " and " +
                      month_label(log_rv.months[i]));
    }
  }
  const std::int64_t begin =
      std::max(log_rv.months.front(), exo.months.front());
  const std::int64_t end = std::min(log_rv.months.back(), exo.months.back());
  if (begin > end) {
    throw DataError("return data and feature data have no overlapping months");
  }
  const RvAggregates agg = derive_rv_aggregates(log_rv.values);

  FeatureFrame frame;
  frame.columns = canonical_columns();
  frame.data.resize(frame.columns.size());
  for (std::int64_t m = begin; m <= end; ++m) {
    const std::size_t ri =
        static_cast<std::size_t>(m - log_rv.months.front());
    const std::size_t ei = static_cast<std::size_t>(m - exo.months.front());
    frame.months.push_back(m);
    frame.data[0].push_back(log_rv.values[ri]);
    frame.data[1].push_back(agg.rvq[ri]);
    frame.data[2].push_back(agg.rva[ri]);
    for (std::size_t c = 0; c < exo.columns.size(); ++c) {
      frame.data[c + 3].push_back(exo.data[c][ei]);
    }
  }
  return frame;
}

FeatureFrame load_frame(const std::string& path) {
  const Csv csv = read_csv(path);
  const std::size_t date_col = find_column(csv.header, "date", path);
  FeatureFrame frame;
  frame.columns = canonical_columns();
  std::vector<std::size_t> col_idx;
  for (const auto& name : frame.columns) {
    col_idx.push_back(find_column(csv.header, name, path));
  }
  frame.data.resize(frame.columns.size());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const std::string ctx = path + ":" + std::to_string(csv.lines[r]);
    const Date d = parse_iso_date(csv.rows[r][date_col], ctx);
    const std::int64_t m = month_serial(d.year, d.month);
    if (!frame.months.empty()) {
      if (m == frame.months.back()) {
        throw DataError(ctx + ": duplicated month " + month_label(m));
      }
      if (m != frame.months.back() + 1) {
        throw DataError(ctx + ": month gap before " + month_label(m));
      }
    }
    frame.months.push_back(m);
    for (std::size_t c = 0; c < frame.columns.size(); ++c) {
      const double v = parse_double(csv.rows[r][col_idx[c]], ctx);
      if (!std::isfinite(v)) {
        throw DataError(ctx + ": non-finite value in column " +
                        frame.columns[c]);
      }
      frame.data[c].push_back(v);
    }
  }
  if (frame.months.empty()) throw DataError(path + ": no data rows");
  return frame;
}

void write_frame(const std::string& path, const FeatureFrame& frame) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  std::string line = "date";
  for (const auto& c : frame.columns) line += "," + c;
  out << line << "\n";
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    line = month_first_day(frame.months[r]);
    for (std::size_t c = 0; c < frame.columns.size(); ++c) {
      line += ",";
      format_17g(line, frame.data[c][r]);
    }
    out << line << "\n";
  }
}

}  // namespace qrv::data
