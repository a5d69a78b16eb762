#pragma once

// Country features, cumulative fatality series and policy indicators, joined
// and aligned on outbreak-relative days.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cgp/calendar.hpp"
#include "cgp/errors.hpp"
#include "cgp/text.hpp"

namespace cgp {

using PolicyVector = std::vector<double>;

struct PolicyTimeline {
  Date anchor;                        // calendar date of entry 0
  std::vector<PolicyVector> days;     // K indicators per day, each in [0, 1]
  std::vector<double> published_stringency;  // empty unless the feed has one

  std::size_t size() const { return days.size(); }
  std::size_t indicators() const { return days.empty() ? 0 : days.front().size(); }

  friend bool operator==(const PolicyTimeline&, const PolicyTimeline&) = default;
};

struct RegionRecord {
  std::string region_id;
  std::optional<std::string> parent_country;
  std::vector<double> features;       // standardized
  std::vector<bool> imputed;          // per feature
  std::vector<double> fatalities;     // cumulative; index 0 = outbreak day 1
  PolicyTimeline policy;              // same length as fatalities
  PolicyTimeline future_policy;       // known policy after the last observation
  double population = 1.0e6;
  std::size_t monotonicity_repairs = 0;

  Date outbreak_date() const { return policy.anchor; }
  std::size_t observed_days() const { return fatalities.size(); }

  friend bool operator==(const RegionRecord&, const RegionRecord&) = default;
};

struct DataConfig {
  double outbreak_threshold = 1.0;
  std::size_t min_history_days = 5;
  double default_population = 1.0e6;
};

struct LoadReport {
  std::vector<std::pair<std::string, std::string>> dropped;  // (region, reason)
  std::vector<std::string> warnings;
  std::vector<std::string> dropped_feature_columns;
  std::size_t repairs = 0;
};

struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<std::string> indicator_names;
  std::vector<RegionRecord> regions;
  LoadReport report;

  const RegionRecord* find(const std::string& id) const {
    for (const auto& r : regions) {
      if (r.region_id == id) return &r;
    }
    return nullptr;
  }
};

// Scalar policy severity in [0, 100].
inline double stringency_index(const PolicyVector& p,
                               std::optional<double> published = std::nullopt) {
  if (published) return std::clamp(*published, 0.0, 100.0);
  if (p.empty()) return 0.0;
  double s = 0.0;
  for (double v : p) s += v;
  return 100.0 * s / static_cast<double>(p.size());
}

inline double stringency_on_day(const PolicyTimeline& t, std::size_t day) {
  if (day < t.published_stringency.size()) {
    return stringency_index(t.days[day], t.published_stringency[day]);
  }
  return stringency_index(t.days[day]);
}

struct ImputedFeatures {
  std::vector<std::vector<double>> values;   // rows = regions
  std::vector<std::vector<bool>> mask;       // true where imputed
  std::vector<std::size_t> kept_columns;
  std::vector<std::size_t> dropped_columns;  // entirely missing
};

// Column-median imputation followed by standardization to zero mean and unit
// (population) variance. Constant columns are centred only.
inline ImputedFeatures impute_features(
    const std::vector<std::vector<std::optional<double>>>& raw) {
  ImputedFeatures out;
  const std::size_t rows = raw.size();
  const std::size_t cols = rows ? raw.front().size() : 0;
  for (const auto& r : raw) {
    if (r.size() != cols) throw ShapeError("ragged feature matrix");
  }
  out.values.assign(rows, {});
  out.mask.assign(rows, {});
  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<double> present;
    for (std::size_t r = 0; r < rows; ++r) {
      if (raw[r][c]) present.push_back(*raw[r][c]);
    }
    if (present.empty()) {
      out.dropped_columns.push_back(c);
      continue;
    }
    std::sort(present.begin(), present.end());
    const std::size_t m = present.size();
    const double median = m % 2 ? present[m / 2]
                                : (present[m / 2 - 1] + present[m / 2]) / 2.0;
    std::vector<double> col(rows);
    for (std::size_t r = 0; r < rows; ++r) col[r] = raw[r][c] ? *raw[r][c] : median;
    double sum = 0.0;
    for (double v : col) sum += v;
    const double mean = sum / static_cast<double>(rows);
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
      out.values[r].push_back(sd > 0.0 ? (col[r] - mean) / sd : col[r] - mean);
      out.mask[r].push_back(!raw[r][c].has_value());
    }
    out.kept_columns.push_back(c);
  }
  return out;
}

namespace detail {

struct CsvTable {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::string where(std::size_t row, std::size_t col) const {
    return path + ":" + std::to_string(line_numbers[row]) + ":" +
           std::to_string(col + 1);
  }
};

inline CsvTable read_csv(const std::string& path) {
  CsvTable t;
  t.path = path;
  const auto lines = split_lines(read_file(path));
  std::size_t ln = 0;
  for (const auto& line : lines) {
    ++ln;
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    if (t.header.empty()) {
      if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) {
        fields[0] = fields[0].substr(3);
      }
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ParseError(path + ":" + std::to_string(ln) + ": expected " +
                       std::to_string(t.header.size()) + " columns, found " +
                       std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(ln);
  }
  return t;
}

inline bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" ||
         s == "null";
}

struct FeatureRow {
  std::optional<std::string> parent;
  std::optional<double> population;
  std::vector<std::optional<double>> values;
};

}  // namespace detail

inline Dataset load_dataset(const std::string& features_path,
                            const std::string& fatalities_path,
                            const std::string& policies_path,
                            const DataConfig& config = {}) {
  Dataset ds;

  // Features.
  const auto ft = detail::read_csv(features_path);
  if (ft.header.empty() || ft.header[0] != "region_id") {
    throw ParseError(features_path + ":1:1: header must start with region_id");
  }
  std::optional<std::size_t> pop_col, parent_col;
  std::vector<std::size_t> value_cols;
  std::vector<std::string> raw_names;
  for (std::size_t c = 1; c < ft.header.size(); ++c) {
    if (ft.header[c] == "population") {
      pop_col = c;
    } else if (ft.header[c] == "parent_country") {
      parent_col = c;
    } else {
      value_cols.push_back(c);
      raw_names.push_back(ft.header[c]);
    }
  }
  std::vector<std::string> region_order;
  std::map<std::string, detail::FeatureRow> feature_rows;
  for (std::size_t r = 0; r < ft.rows.size(); ++r) {
    const auto& row = ft.rows[r];
    const std::string& id = row[0];
    if (id.empty()) throw ParseError(ft.where(r, 0) + ": empty region_id");
    if (feature_rows.count(id)) {
      throw ParseError(ft.where(r, 0) + ": duplicate region '" + id + "'");
    }
    detail::FeatureRow fr;
    if (parent_col && !detail::is_missing(row[*parent_col])) fr.parent = row[*parent_col];
    if (pop_col && !detail::is_missing(row[*pop_col])) {
      fr.population = parse_double(row[*pop_col], ft.where(r, *pop_col));
      if (!(*fr.population > 0.0)) {
        throw ParseError(ft.where(r, *pop_col) + ": population must be positive");
      }
    }
    for (std::size_t c : value_cols) {
      if (detail::is_missing(row[c])) {
        fr.values.push_back(std::nullopt);
      } else {
        fr.values.push_back(parse_double(row[c], ft.where(r, c)));
      }
    }
    region_order.push_back(id);
    feature_rows.emplace(id, std::move(fr));
  }

  // Fatalities.
  const auto fat = detail::read_csv(fatalities_path);
  std::map<std::string, std::map<int, double>> deaths;
  if (!fat.header.empty()) {
    if (fat.header.size() != 3 || fat.header[0] != "region_id" ||
        fat.header[1] != "date" || fat.header[2] != "cumulative_deaths") {
      throw ParseError(fatalities_path +
                       ":1:1: header must be region_id,date,cumulative_deaths");
    }
  }
  for (std::size_t r = 0; r < fat.rows.size(); ++r) {
    const auto& row = fat.rows[r];
    Date d;
    if (!try_parse_date(row[1], d)) {
      throw ParseError(fat.where(r, 1) + ": invalid date '" + row[1] + "'");
    }
    const double v = parse_double(row[2], fat.where(r, 2));
    if (v < 0.0 || std::floor(v) != v) {
      throw ParseError(fat.where(r, 2) + ": cumulative deaths must be a non-negative integer");
    }
    deaths[row[0]][d.days] = v;
  }
  if (fat.rows.empty()) ds.report.warnings.push_back("fatality file is empty");

  // Policies.
  const auto pol = detail::read_csv(policies_path);
  std::size_t k_ind = 0;
  bool has_stringency = false;
  if (!pol.header.empty()) {
    if (pol.header.size() < 2 || pol.header[0] != "region_id" || pol.header[1] != "date") {
      throw ParseError(policies_path + ":1:1: header must start with region_id,date");
    }
    has_stringency = pol.header.back() == "stringency";
    k_ind = pol.header.size() - 2 - (has_stringency ? 1 : 0);
    for (std::size_t c = 2; c < 2 + k_ind; ++c) ds.indicator_names.push_back(pol.header[c]);
  }
  // Ordinal indicator levels are scaled by the column maximum when it exceeds 1.
  std::vector<double> col_max(k_ind, 0.0);
  struct PolicyRow {
    PolicyVector p;
    std::optional<double> stringency;
  };
  std::map<std::string, std::map<int, PolicyRow>> policies;
  for (std::size_t r = 0; r < pol.rows.size(); ++r) {
    const auto& row = pol.rows[r];
    Date d;
    if (!try_parse_date(row[1], d)) {
      throw ParseError(pol.where(r, 1) + ": invalid date '" + row[1] + "'");
    }
    PolicyRow pr;
    for (std::size_t k = 0; k < k_ind; ++k) {
      const double v = parse_double(row[2 + k], pol.where(r, 2 + k));
      if (v < 0.0) throw ParseError(pol.where(r, 2 + k) + ": negative policy level");
      col_max[k] = std::max(col_max[k], v);
      pr.p.push_back(v);
    }
    if (has_stringency && !detail::is_missing(row.back())) {
      pr.stringency = parse_double(row.back(), pol.where(r, row.size() - 1));
    }
    policies[row[0]][d.days] = std::move(pr);
  }
  for (auto& [id, by_day] : policies) {
    for (auto& [day, pr] : by_day) {
      for (std::size_t k = 0; k < k_ind; ++k) {
        if (col_max[k] > 1.0) pr.p[k] /= col_max[k];
      }
    }
  }

  // Join checks.
  std::set<std::string> orphans;
  for (const auto& [id, _] : deaths) {
    if (!feature_rows.count(id)) orphans.insert(id);
  }
  for (const auto& [id, _] : policies) {
    if (!feature_rows.count(id)) orphans.insert(id);
  }
  for (const auto& [id, _] : deaths) {
    if (feature_rows.count(id) && !policies.count(id)) orphans.insert(id);
  }
  if (!orphans.empty()) {
    std::string list;
    for (const auto& o : orphans) list += (list.empty() ? "" : ", ") + o;
    throw JoinError("regions missing from features or policies: " + list);
  }

  // Features are imputed over every region in the features file.
  std::vector<std::vector<std::optional<double>>> raw;
  for (const auto& id : region_order) raw.push_back(feature_rows[id].values);
  ImputedFeatures imp = raw.empty() ? ImputedFeatures{} : impute_features(raw);
  if (raw.empty()) {
    for (std::size_t c = 0; c < raw_names.size(); ++c) imp.kept_columns.push_back(c);
  }
  for (std::size_t c : imp.kept_columns) ds.feature_names.push_back(raw_names[c]);
  for (std::size_t c : imp.dropped_columns) {
    ds.report.dropped_feature_columns.push_back(raw_names[c]);
    ds.report.warnings.push_back("feature column '" + raw_names[c] +
                                 "' has no values and was dropped");
  }

  for (std::size_t ri = 0; ri < region_order.size(); ++ri) {
    const std::string& id = region_order[ri];
    auto dit = deaths.find(id);
    if (dit == deaths.end() || dit->second.empty()) {
      ds.report.dropped.emplace_back(id, "no fatality data");
      continue;
    }
    const auto& series = dit->second;
    const int first = series.begin()->first;
    const int last = series.rbegin()->first;
    std::vector<double> cum;
    double prev = 0.0;
    std::size_t repairs = 0;
    std::size_t filled = 0;
    for (int d = first; d <= last; ++d) {
      auto it = series.find(d);
      double v = prev;
      if (it == series.end()) {
        ++filled;
      } else if (it->second < prev) {
        ++repairs;
      } else {
        v = it->second;
      }
      cum.push_back(v);
      prev = v;
    }
    if (filled) {
      ds.report.warnings.push_back(id + ": " + std::to_string(filled) +
                                   " missing fatality dates carried forward");
    }
    std::size_t start = cum.size();
    for (std::size_t i = 0; i < cum.size(); ++i) {
      if (cum[i] >= config.outbreak_threshold) {
        start = i;
        break;
      }
    }
    if (start == cum.size()) {
      ds.report.dropped.emplace_back(id, "deaths never reach outbreak threshold");
      continue;
    }
    if (cum.size() - start < config.min_history_days) {
      ds.report.dropped.emplace_back(
          id, "only " + std::to_string(cum.size() - start) + " observed days");
      continue;
    }

    RegionRecord rec;
    rec.region_id = id;
    const auto& fr = feature_rows[id];
    rec.parent_country = fr.parent;
    rec.population = fr.population.value_or(config.default_population);
    rec.features = imp.values.empty() ? std::vector<double>{} : imp.values[ri];
    rec.imputed = imp.mask.empty() ? std::vector<bool>{} : imp.mask[ri];
    rec.fatalities.assign(cum.begin() + static_cast<std::ptrdiff_t>(start), cum.end());
    rec.monotonicity_repairs = repairs;
    ds.report.repairs += repairs;

    const auto& pmap = policies.at(id);
    const Date outbreak{first + static_cast<int>(start)};
    auto policy_on = [&](int day, bool& stringency_known, double& s) {
      auto it = pmap.upper_bound(day);
      if (it == pmap.begin()) {
        stringency_known = has_stringency;
        s = 0.0;
        return PolicyVector(k_ind, 0.0);
      }
      --it;
      stringency_known = it->second.stringency.has_value();
      s = it->second.stringency.value_or(0.0);
      return it->second.p;
    };
    bool all_published = has_stringency;
    std::vector<double> published;
    rec.policy.anchor = outbreak;
    std::size_t synthesized = 0;
    for (int d = outbreak.days; d <= last; ++d) {
      bool known;
      double s;
      if (!pmap.count(d)) ++synthesized;
      rec.policy.days.push_back(policy_on(d, known, s));
      all_published = all_published && known;
      published.push_back(s);
    }
    if (all_published) rec.policy.published_stringency = published;
    if (synthesized) {
      ds.report.warnings.push_back(id + ": " + std::to_string(synthesized) +
                                   " policy days filled from neighbouring records");
    }
    rec.future_policy.anchor = Date{last + 1};
    const int policy_last = pmap.rbegin()->first;
    bool future_published = has_stringency;
    std::vector<double> future_s;
    for (int d = last + 1; d <= policy_last; ++d) {
      bool known;
      double s;
      rec.future_policy.days.push_back(policy_on(d, known, s));
      future_published = future_published && known;
      future_s.push_back(s);
    }
    if (future_published && !future_s.empty()) {
      rec.future_policy.published_stringency = future_s;
    }
    ds.regions.push_back(std::move(rec));
  }
  for (const auto& [id, reason] : ds.report.dropped) {
    ds.report.warnings.push_back("dropped region " + id + ": " + reason);
  }
  return ds;
}

// Sums sub-national children into one national record on a shared calendar.
// Children contribute zero deaths before their own outbreak day; policies and
// features are population-weighted over the children active on each day.
inline RegionRecord aggregate_regions(const std::vector<RegionRecord>& children,
                                      const std::string& national_id) {
  if (children.empty()) throw AlignmentError("no child regions to aggregate");
  const auto& parent = children.front().parent_country;
  for (const auto& c : children) {
    if (c.parent_country != parent) {
      throw AlignmentError("child regions do not share a parent country");
    }
    if (c.fatalities.size() != c.policy.size()) {
      throw AlignmentError("child '" + c.region_id + "' has misaligned policy");
    }
  }
  if (children.size() == 1) {
    RegionRecord r = children.front();
    r.region_id = national_id;
    r.parent_country.reset();
    return r;
  }
  auto end_date = [](const RegionRecord& r) {
    return r.policy.anchor + (static_cast<int>(r.fatalities.size()) - 1);
  };
  const Date last = end_date(children.front());
  Date first = children.front().policy.anchor;
  for (const auto& c : children) {
    if (end_date(c) != last) {
      throw AlignmentError("child '" + c.region_id + "' ends on " +
                           format_date(end_date(c)) + ", expected " +
                           format_date(last));
    }
    first = std::min(first, c.policy.anchor);
  }
  const std::size_t k = children.front().policy.indicators();
  const std::size_t d = children.front().features.size();
  RegionRecord out;
  out.region_id = national_id;
  out.policy.anchor = first;
  out.population = 0.0;
  for (const auto& c : children) out.population += c.population;
  out.features.assign(d, 0.0);
  out.imputed.assign(d, false);
  for (const auto& c : children) {
    for (std::size_t j = 0; j < d; ++j) {
      out.features[j] += c.population * c.features[j] / out.population;
      out.imputed[j] = out.imputed[j] || c.imputed[j];
    }
    out.monotonicity_repairs += c.monotonicity_repairs;
  }
  for (Date day = first; day <= last; day = day + 1) {
    double total = 0.0;
    double weight = 0.0;
    PolicyVector p(k, 0.0);
    for (const auto& c : children) {
      const int idx = day - c.policy.anchor;
      if (idx < 0) continue;
      total += c.fatalities[static_cast<std::size_t>(idx)];
      weight += c.population;
      for (std::size_t j = 0; j < k; ++j) {
        p[j] += c.population * c.policy.days[static_cast<std::size_t>(idx)][j];
      }
    }
    for (double& v : p) v /= weight;
    out.fatalities.push_back(total);
    out.policy.days.push_back(std::move(p));
  }
  std::size_t future = children.front().future_policy.size();
  for (const auto& c : children) future = std::min(future, c.future_policy.size());
  out.future_policy.anchor = last + 1;
  for (std::size_t t = 0; t < future; ++t) {
    PolicyVector p(k, 0.0);
    for (const auto& c : children) {
      for (std::size_t j = 0; j < k; ++j) {
        p[j] += c.population * c.future_policy.days[t][j] / out.population;
      }
    }
    out.future_policy.days.push_back(std::move(p));
  }
  return out;
}

// Cuts a region's observations after `last`, moving the later policy days to
// the front of the known future timeline. Returns nullopt if fewer than
// min_days observations remain.
inline std::optional<RegionRecord> truncate_region(const RegionRecord& r, Date last,
                                                   std::size_t min_days) {
  const int keep = last - r.policy.anchor + 1;
  if (keep < static_cast<int>(min_days)) return std::nullopt;
  if (static_cast<std::size_t>(keep) >= r.fatalities.size()) return r;
  const auto k = static_cast<std::size_t>(keep);
  RegionRecord out = r;
  out.fatalities.resize(k);
  out.policy.days.resize(k);
  std::vector<PolicyVector> future(r.policy.days.begin() + static_cast<std::ptrdiff_t>(k),
                                   r.policy.days.end());
  future.insert(future.end(), r.future_policy.days.begin(), r.future_policy.days.end());
  out.future_policy.days = std::move(future);
  out.future_policy.anchor = last + 1;
  out.future_policy.published_stringency.clear();
  if (!r.policy.published_stringency.empty()) {
    out.policy.published_stringency.resize(k);
    if (!r.future_policy.published_stringency.empty() ||
        r.future_policy.days.empty()) {
      std::vector<double> fs(r.policy.published_stringency.begin() + static_cast<std::ptrdiff_t>(k),
                             r.policy.published_stringency.end());
      fs.insert(fs.end(), r.future_policy.published_stringency.begin(),
                r.future_policy.published_stringency.end());
      out.future_policy.published_stringency = std::move(fs);
    }
  }
  return out;
}

// Text dump of a dataset; parse_dataset() inverts it exactly.
inline std::string serialize_dataset(const Dataset& ds) {
  std::ostringstream out;
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
  };
  auto nums = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_exact(v[i]);
    return s;
  };
  auto write_timeline = [&](const char* tag, const PolicyTimeline& t) {
    out << tag << " " << format_date(t.anchor) << " " << t.days.size() << "\n";
    for (const auto& p : t.days) out << "  " << nums(p) << "\n";
    out << tag << "_stringency " << nums(t.published_stringency) << "\n";
  };
  out << "cgp-dataset 1\n";
  out << "features " << join(ds.feature_names) << "\n";
  out << "indicators " << join(ds.indicator_names) << "\n";
  out << "regions " << ds.regions.size() << "\n";
  for (const auto& r : ds.regions) {
    out << "region " << r.region_id << "\n";
    out << "parent " << r.parent_country.value_or("-") << "\n";
    out << "population " << format_exact(r.population) << "\n";
    out << "repairs " << r.monotonicity_repairs << "\n";
    out << "values " << nums(r.features) << "\n";
    std::string mask;
    for (std::size_t i = 0; i < r.imputed.size(); ++i) {
      mask += (i ? "," : "");
      mask += r.imputed[i] ? "1" : "0";
    }
    out << "mask " << mask << "\n";
    out << "fatalities " << nums(r.fatalities) << "\n";
    write_timeline("policy", r.policy);
    write_timeline("future", r.future_policy);
  }
  return out.str();
}

inline Dataset parse_dataset(const std::string& text) {
  const auto lines = split_lines(text);
  std::size_t i = 0;
  auto next = [&](const std::string& tag) -> std::string {
    if (i >= lines.size()) throw ParseError("dataset dump truncated before '" + tag + "'");
    const std::string& line = lines[i++];
    const std::string prefix = tag + " ";
    if (line == tag) return "";
    if (line.rfind(prefix, 0) != 0) {
      throw ParseError("dataset dump line " + std::to_string(i) + ": expected '" + tag + "'");
    }
    return line.substr(prefix.size());
  };
  auto names = [](const std::string& s) {
    return s.empty() ? std::vector<std::string>{} : split(s, ',');
  };
  auto nums = [&](const std::string& s) {
    std::vector<double> v;
    if (s.empty()) return v;
    for (const auto& f : split(s, ',')) {
      v.push_back(parse_double(f, "dataset dump line " + std::to_string(i)));
    }
    return v;
  };
  auto read_timeline = [&](const std::string& tag) {
    PolicyTimeline t;
    const auto head = split(next(tag), ' ');
    if (head.size() != 2) throw ParseError("bad timeline header");
    t.anchor = parse_date(head[0]);
    const auto n = parse_integer(head[1], "timeline length");
    for (long long d = 0; d < n; ++d) {
      if (i >= lines.size()) throw ParseError("dataset dump truncated in timeline");
      t.days.push_back(nums(std::string(trim(lines[i++]))));
    }
    t.published_stringency = nums(next(tag + "_stringency"));
    return t;
  };
  if (next("cgp-dataset") != "1") throw ParseError("unsupported dataset dump version");
  Dataset ds;
  ds.feature_names = names(next("features"));
  ds.indicator_names = names(next("indicators"));
  const auto n = parse_integer(next("regions"), "region count");
  for (long long r = 0; r < n; ++r) {
    RegionRecord rec;
    rec.region_id = next("region");
    const auto parent = next("parent");
    if (parent != "-") rec.parent_country = parent;
    rec.population = parse_double(next("population"), "population");
    rec.monotonicity_repairs =
        static_cast<std::size_t>(parse_integer(next("repairs"), "repairs"));
    rec.features = nums(next("values"));
    for (const auto& m : names(next("mask"))) rec.imputed.push_back(m == "1");
    rec.fatalities = nums(next("fatalities"));
    rec.policy = read_timeline("policy");
    rec.future_policy = read_timeline("future");
    ds.regions.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace cgp
