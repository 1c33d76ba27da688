#include "selfalign/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <utility>

#include "selfalign/csv.hpp"
#include "selfalign/errors.hpp"

namespace selfalign::report {

namespace {

constexpr double kEdgeSnap = 1e-9;
constexpr std::string_view kMetaPrefix = "# meta=";
constexpr std::string_view kOutcomesHeader =
    "probe_id,category,delta_original,delta_corrected,error_reduction,"
    "classification";

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot write " + path.string());
  return out;
}

void write_meta_line(std::ostream& out, const nlohmann::ordered_json& meta) {
  out << kMetaPrefix << meta.dump() << "\n";
}

std::string optional_field(const std::optional<double>& value) {
  return value.has_value() ? csv::format_double(*value) : std::string();
}

nlohmann::ordered_json histogram_to_json(const Histogram& hist) {
  nlohmann::ordered_json j;
  j["unit"] = "percent";
  nlohmann::ordered_json bins = nlohmann::ordered_json::array();
  for (const Histogram::Bin& bin : hist.bins()) {
    nlohmann::ordered_json entry;
    entry["low"] = bin.low;
    entry["high"] = bin.high;
    entry["count"] = bin.count;
    bins.push_back(std::move(entry));
  }
  j["bins"] = std::move(bins);
  return j;
}

double parse_double_field(const std::string& field, const std::string& where) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw LoadError(where + ": malformed number \"" + field + "\"");
  }
  return value;
}

int parse_int_field(const std::string& field, const std::string& where) {
  int value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw LoadError(where + ": malformed integer \"" + field + "\"");
  }
  return value;
}

std::string_view gap_name(MajorityGap gap) {
  return gap == MajorityGap::kTie ? "tie" : "not-in-survey";
}

void write_outcome_fields(std::ostream& out, const OutcomeRow& row) {
  out << csv::join({row.probe_id, std::to_string(row.category_index),
                    csv::format_double(row.delta_original),
                    optional_field(row.delta_corrected),
                    optional_field(row.error_reduction),
                    std::string(outcome_class_name(row.classification))})
      << "\n";
}

}  // namespace

Histogram::Histogram(double step) : step_(step) {
  for (double low = 0.0; low < 100.0; low += step) {
    bins_.push_back({low, low + step, 0});
  }
}

Histogram Histogram::deciles() { return Histogram(10.0); }

Histogram Histogram::quintiles() { return Histogram(20.0); }

void Histogram::add(double percent) {
  const double nearest_edge = std::round(percent / step_) * step_;
  const double value =
      std::abs(percent - nearest_edge) <= kEdgeSnap ? nearest_edge : percent;
  if (!(value >= 0.0) || value > 100.0) {
    throw std::invalid_argument("histogram value " + std::to_string(percent) +
                                " is outside [0, 100]");
  }
  std::size_t bin = static_cast<std::size_t>(value / step_);
  if (bin >= bins_.size()) bin = bins_.size() - 1;  // 100 goes into the last bin
  ++bins_[bin].count;
}

int Histogram::total() const {
  int sum = 0;
  for (const Bin& bin : bins_) sum += bin.count;
  return sum;
}

OutcomeRow to_row(const AlignmentOutcome& outcome) {
  OutcomeRow row;
  row.probe_id = outcome.probe_id;
  row.category_index = outcome.category_index;
  row.delta_original = outcome.delta_original;
  row.delta_corrected = outcome.delta_corrected;
  row.error_reduction = outcome.error_reduction;
  row.classification = outcome.classification;
  return row;
}

RunSummary summarize(nlohmann::ordered_json meta,
                     const std::vector<OutcomeRow>& rows) {
  RunSummary summary;
  summary.meta = std::move(meta);
  summary.totals.misaligned = static_cast<int>(rows.size());

  std::map<int, int> improved_by_category;
  for (const OutcomeRow& row : rows) {
    switch (row.classification) {
      case OutcomeClass::kImproved:
        ++summary.totals.improved;
        break;
      case OutcomeClass::kUnchanged:
        ++summary.totals.unchanged;
        break;
      case OutcomeClass::kDecreased:
        ++summary.totals.decreased;
        break;
      case OutcomeClass::kSkipped:
        ++summary.totals.skipped;
        break;
    }
    summary.error_sizes.add(row.delta_original * 100.0);
    if (row.classification == OutcomeClass::kImproved) {
      if (!row.error_reduction.has_value()) {
        throw std::invalid_argument("improved outcome " + row.probe_id +
                                    " lacks an error reduction");
      }
      summary.error_reductions.add(*row.error_reduction * 100.0);
      ++improved_by_category[row.category_index];
    }
  }

  const int evaluated = summary.totals.improved + summary.totals.unchanged +
                        summary.totals.decreased;
  summary.improvement_rate =
      evaluated > 0
          ? static_cast<double>(summary.totals.improved) / evaluated
          : 0.0;
  if (rows.empty()) {
    summary.warnings.push_back("empty run: no misaligned probes to summarize");
  } else if (evaluated == 0) {
    summary.warnings.push_back(
        "all outcomes were skipped; improvement rate is 0 by convention");
  }

  for (const Category& category : category_catalog()) {
    if (!category_admitted(category.index)) continue;
    summary.categories.push_back({category.index, std::string(category.name),
                                  improved_by_category[category.index]});
  }
  return summary;
}

nlohmann::ordered_json summary_to_json(const RunSummary& summary) {
  nlohmann::ordered_json j;
  j["meta"] = summary.meta;

  nlohmann::ordered_json totals;
  totals["misaligned"] = summary.totals.misaligned;
  totals["improved"] = summary.totals.improved;
  totals["unchanged"] = summary.totals.unchanged;
  totals["decreased"] = summary.totals.decreased;
  totals["skipped"] = summary.totals.skipped;
  j["totals"] = std::move(totals);

  j["improvement_rate"] = summary.improvement_rate;

  nlohmann::ordered_json histograms;
  histograms["error_sizes"] = histogram_to_json(summary.error_sizes);
  histograms["error_reductions"] = histogram_to_json(summary.error_reductions);
  j["histograms"] = std::move(histograms);

  nlohmann::ordered_json categories = nlohmann::ordered_json::array();
  for (const CategoryCount& category : summary.categories) {
    nlohmann::ordered_json entry;
    entry["index"] = category.index;
    entry["name"] = category.name;
    entry["improved"] = category.improved;
    categories.push_back(std::move(entry));
  }
  j["categories"] = std::move(categories);
  j["warnings"] = summary.warnings;
  return j;
}

void write_summary_json(const std::filesystem::path& path,
                        const RunSummary& summary) {
  std::ofstream out = open_for_write(path);
  out << summary_to_json(summary).dump(2) << "\n";
  if (!out) throw LoadError("failed writing " + path.string());
}

void write_outcomes_csv(const std::filesystem::path& path,
                        const nlohmann::ordered_json& meta,
                        const std::vector<OutcomeRow>& rows) {
  std::ofstream out = open_for_write(path);
  write_meta_line(out, meta);
  out << kOutcomesHeader << "\n";
  for (const OutcomeRow& row : rows) write_outcome_fields(out, row);
  if (!out) throw LoadError("failed writing " + path.string());
}

void write_histograms_csv(const std::filesystem::path& path,
                          const RunSummary& summary) {
  std::ofstream out = open_for_write(path);
  write_meta_line(out, summary.meta);
  out << "histogram,bin_low,bin_high,count\n";
  const auto emit = [&out](std::string_view name, const Histogram& hist) {
    for (const Histogram::Bin& bin : hist.bins()) {
      out << csv::join({std::string(name), csv::format_double(bin.low),
                        csv::format_double(bin.high),
                        std::to_string(bin.count)})
          << "\n";
    }
  };
  emit("error_sizes", summary.error_sizes);
  emit("error_reductions", summary.error_reductions);
  if (!out) throw LoadError("failed writing " + path.string());
}

void write_histogram_csv(const std::filesystem::path& path,
                         const nlohmann::ordered_json& meta,
                         const std::string& name, const Histogram& histogram) {
  std::ofstream out = open_for_write(path);
  write_meta_line(out, meta);
  out << "histogram,bin_low,bin_high,count\n";
  for (const Histogram::Bin& bin : histogram.bins()) {
    out << csv::join({name, csv::format_double(bin.low),
                      csv::format_double(bin.high), std::to_string(bin.count)})
        << "\n";
  }
  if (!out) throw LoadError("failed writing " + path.string());
}

void write_categories_csv(const std::filesystem::path& path,
                          const RunSummary& summary) {
  std::ofstream out = open_for_write(path);
  write_meta_line(out, summary.meta);
  out << "category_index,category_name,improved\n";
  for (const CategoryCount& category : summary.categories) {
    out << csv::join({std::to_string(category.index), category.name,
                      std::to_string(category.improved)})
        << "\n";
  }
  if (!out) throw LoadError("failed writing " + path.string());
}

void write_skipped_csv(const std::filesystem::path& path,
                       const nlohmann::ordered_json& meta,
                       const std::vector<AlignmentOutcome>& outcomes) {
  std::ofstream out = open_for_write(path);
  write_meta_line(out, meta);
  out << "probe_id,reason\n";
  for (const AlignmentOutcome& outcome : outcomes) {
    if (outcome.classification != OutcomeClass::kSkipped) continue;
    out << csv::join({outcome.probe_id, outcome.skip_reason}) << "\n";
  }
  if (!out) throw LoadError("failed writing " + path.string());
}

void write_misaligned_csv(const std::filesystem::path& path,
                          const nlohmann::ordered_json& meta,
                          const MisalignmentScan& scan) {
  std::ofstream out = open_for_write(path);
  write_meta_line(out, meta);
  out << "probe_id,category,count_a,count_b,count_unparsed,delta_original\n";
  for (const ZeroShotResult* zero : scan.misaligned()) {
    out << csv::join({zero->probe->probe_id,
                      std::to_string(zero->probe->category_index),
                      std::to_string(zero->dist.count_a),
                      std::to_string(zero->dist.count_b),
                      std::to_string(zero->dist.count_unparsed),
                      csv::format_double(zero->delta_original)})
        << "\n";
  }
  if (!out) throw LoadError("failed writing " + path.string());
}

void write_missing_csv(const std::filesystem::path& path,
                       const nlohmann::ordered_json& meta,
                       const MisalignmentScan& scan) {
  std::ofstream out = open_for_write(path);
  write_meta_line(out, meta);
  out << "probe_id,reason\n";
  for (const MissingMajority& missing : scan.missing) {
    out << csv::join({missing.probe_id, std::string(gap_name(missing.reason))})
        << "\n";
  }
  if (!out) throw LoadError("failed writing " + path.string());
}

void write_robustness_csv(const std::filesystem::path& path,
                          const nlohmann::ordered_json& meta,
                          const std::vector<AlignmentOutcome>& outcomes) {
  std::ofstream out = open_for_write(path);
  write_meta_line(out, meta);
  out << "probe_id,trial,category,delta_original,delta_corrected,"
         "error_reduction,classification\n";
  for (const AlignmentOutcome& outcome : outcomes) {
    out << csv::join(
               {outcome.probe_id, std::to_string(outcome.trial),
                std::to_string(outcome.category_index),
                csv::format_double(outcome.delta_original),
                optional_field(outcome.delta_corrected),
                optional_field(outcome.error_reduction),
                std::string(outcome_class_name(outcome.classification))})
        << "\n";
  }
  if (!out) throw LoadError("failed writing " + path.string());
}

ParsedOutcomes parse_outcomes_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line) || line.rfind(kMetaPrefix, 0) != 0) {
    throw LoadError(path.string() + ": missing \"# meta=\" line");
  }
  ParsedOutcomes parsed;
  try {
    parsed.meta = nlohmann::ordered_json::parse(line.substr(kMetaPrefix.size()));
  } catch (const nlohmann::json::exception& err) {
    throw LoadError(path.string() + ": malformed meta line: " + err.what());
  }
  if (!std::getline(in, line) || line != kOutcomesHeader) {
    throw LoadError(path.string() + ": missing outcomes header");
  }

  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const std::vector<std::string> fields = csv::split(line);
    if (fields.size() != 6) {
      throw LoadError(where + ": expected 6 fields, got " +
                      std::to_string(fields.size()));
    }
    OutcomeRow row;
    row.probe_id = fields[0];
    row.category_index = parse_int_field(fields[1], where);
    row.delta_original = parse_double_field(fields[2], where);
    if (!fields[3].empty()) {
      row.delta_corrected = parse_double_field(fields[3], where);
    }
    if (!fields[4].empty()) {
      row.error_reduction = parse_double_field(fields[4], where);
    }
    try {
      row.classification = parse_outcome_class(fields[5]);
    } catch (const LoadError&) {
      throw LoadError(where + ": unknown classification \"" + fields[5] + "\"");
    }
    parsed.rows.push_back(std::move(row));
  }
  return parsed;
}

}  // namespace selfalign::report
