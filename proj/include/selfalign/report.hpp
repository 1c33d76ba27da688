#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selfalign/eval.hpp"

namespace selfalign::report {

/// Fixed-width percent histogram over [0, 100]. Bins are right-open with the
/// last bin closed; a value on an edge falls into the higher bin and 100
/// into the last bin. Values within 1e-9 of an edge are snapped to it first,
/// so fractions that only miss an edge by float noise bin as intended.
class Histogram {
 public:
  struct Bin {
    double low = 0.0;
    double high = 0.0;
    int count = 0;
  };

  /// Ten bins of width 10 (zero-shot error sizes).
  static Histogram deciles();

  /// Five bins of width 20 (error reductions).
  static Histogram quintiles();

  /// Adds one percent value; throws std::invalid_argument outside [0, 100]
  /// (after edge snapping).
  void add(double percent);

  const std::vector<Bin>& bins() const { return bins_; }
  int total() const;

 private:
  explicit Histogram(double step);

  double step_ = 0.0;
  std::vector<Bin> bins_;
};

/// Outcome counts of one run.
struct RunTotals {
  int misaligned = 0;
  int improved = 0;
  int unchanged = 0;
  int decreased = 0;
  int skipped = 0;
};

/// Improved-outcome count of one category.
struct CategoryCount {
  int index = 0;
  std::string name;
  int improved = 0;
};

/// One row of outcomes.csv: exactly the fields every summary figure is
/// computed from, so re-reading the file reproduces the summary.
struct OutcomeRow {
  std::string probe_id;
  int category_index = 0;
  double delta_original = 0.0;
  std::optional<double> delta_corrected;  // empty when skipped
  std::optional<double> error_reduction;  // present iff improved
  OutcomeClass classification = OutcomeClass::kSkipped;
};

OutcomeRow to_row(const AlignmentOutcome& outcome);

/// Aggregated view of one run. `meta` is the run identity block built by the
/// runner (run id, config digest, seeds, model, language, country, catalog
/// version, notices); it is embedded verbatim in summary.json and as a
/// comment line in every CSV.
struct RunSummary {
  nlohmann::ordered_json meta;
  RunTotals totals;
  double improvement_rate = 0.0;  // improved / (improved+unchanged+decreased)
  Histogram error_sizes = Histogram::deciles();          // delta_original, %
  Histogram error_reductions = Histogram::quintiles();   // error reduction, %
  std::vector<CategoryCount> categories;  // all admitted categories
  std::vector<std::string> warnings;
};

/// Deterministic aggregation of the outcome rows: totals by classification,
/// improvement rate (0 with a warning when nothing was evaluated), the two
/// histograms and per-category improved counts. An empty row list yields a
/// valid all-zero summary plus a warning.
RunSummary summarize(nlohmann::ordered_json meta,
                     const std::vector<OutcomeRow>& rows);

nlohmann::ordered_json summary_to_json(const RunSummary& summary);

// ---------------------------------------------------------------------------
// File emission. All writers are byte-deterministic given their inputs, use
// UTF-8 with "\n" newlines and start CSVs with the line "# meta=<compact
// JSON>". I/O failures throw LoadError naming the path.
// ---------------------------------------------------------------------------

void write_summary_json(const std::filesystem::path& path,
                        const RunSummary& summary);

/// Header: probe_id,category,delta_original,delta_corrected,error_reduction,
/// classification. One row per misaligned probe; empty fields for absent
/// optionals; doubles in shortest round-trip form.
void write_outcomes_csv(const std::filesystem::path& path,
                        const nlohmann::ordered_json& meta,
                        const std::vector<OutcomeRow>& rows);

/// Header: histogram,bin_low,bin_high,count.
void write_histograms_csv(const std::filesystem::path& path,
                          const RunSummary& summary);

/// Same layout with a single named histogram (the zero-shot error sizes).
void write_histogram_csv(const std::filesystem::path& path,
                         const nlohmann::ordered_json& meta,
                         const std::string& name, const Histogram& histogram);

/// Header: category_index,category_name,improved.
void write_categories_csv(const std::filesystem::path& path,
                          const RunSummary& summary);

/// Header: probe_id,reason. Writes only the skipped outcomes.
void write_skipped_csv(const std::filesystem::path& path,
                       const nlohmann::ordered_json& meta,
                       const std::vector<AlignmentOutcome>& outcomes);

/// Header: probe_id,category,count_a,count_b,count_unparsed,delta_original.
/// One row per misaligned probe of the zero-shot scan.
void write_misaligned_csv(const std::filesystem::path& path,
                          const nlohmann::ordered_json& meta,
                          const MisalignmentScan& scan);

/// Header: probe_id,reason. Probes without a usable survey majority.
void write_missing_csv(const std::filesystem::path& path,
                       const nlohmann::ordered_json& meta,
                       const MisalignmentScan& scan);

/// Header: probe_id,trial,category,delta_original,delta_corrected,
/// error_reduction,classification. One row per probe and reorder trial.
void write_robustness_csv(const std::filesystem::path& path,
                          const nlohmann::ordered_json& meta,
                          const std::vector<AlignmentOutcome>& outcomes);

/// outcomes.csv read back: the verbatim meta block and the rows.
struct ParsedOutcomes {
  nlohmann::ordered_json meta;
  std::vector<OutcomeRow> rows;
};

/// Parses a file written by write_outcomes_csv; throws LoadError on any
/// deviation from its format.
ParsedOutcomes parse_outcomes_csv(const std::filesystem::path& path);

}  // namespace selfalign::report
