#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mapvol {

using Date = std::chrono::sys_days;

/// Parses a strict ISO-8601 calendar date (YYYY-MM-DD). Throws DataError.
Date parse_date(std::string_view text);
std::string format_date(Date d);

/// Half-open index range [begin, end) into a panel.
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    [[nodiscard]] std::size_t size() const noexcept { return end > begin ? end - begin : 0; }
    [[nodiscard]] bool empty() const noexcept { return size() == 0; }
    [[nodiscard]] bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
};

/**
 * @brief Aligned daily series consumed by every model.
 *
 * rv is the annualized realized volatility, ret the index return (only its sign
 * is used), x the policy proxy in [0,1] and delta the announcement flag. The
 * panel is immutable once built and validates its invariants on construction.
 */
class Panel {
 public:
    /// Validates and builds a panel. Throws DataError on any invariant violation.
    static Panel create(std::vector<Date> dates, std::vector<double> rv, std::vector<double> ret,
                        std::vector<double> x, std::vector<double> delta);

    [[nodiscard]] std::size_t size() const noexcept { return rv_.size(); }
    [[nodiscard]] std::span<const Date> dates() const noexcept { return dates_; }
    [[nodiscard]] std::span<const double> rv() const noexcept { return rv_; }
    [[nodiscard]] std::span<const double> ret() const noexcept { return ret_; }
    [[nodiscard]] std::span<const double> x() const noexcept { return x_; }
    [[nodiscard]] std::span<const double> delta() const noexcept { return delta_; }
    /// Negative-return dummy D_t (1 if ret_t < 0, else 0).
    [[nodiscard]] std::span<const double> negative() const noexcept { return negative_; }

    [[nodiscard]] Panel slice(IndexRange range) const;

    /// Index of the last date <= d, if any.
    [[nodiscard]] std::optional<std::size_t> last_index_on_or_before(Date d) const;
    /// Index of the first date > d, if any.
    [[nodiscard]] std::optional<std::size_t> first_index_after(Date d) const;

 private:
    Panel() = default;

    std::vector<Date> dates_;
    std::vector<double> rv_;
    std::vector<double> ret_;
    std::vector<double> x_;
    std::vector<double> delta_;
    std::vector<double> negative_;
};

/// d_t = 1 if ret_t < 0 else 0; a zero return counts as non-negative.
std::vector<double> sign_dummy(std::span<const double> ret);

/// Logical-to-physical column mapping for CSV ingestion.
struct ColumnMap {
    std::string date = "date";
    std::string rv = "rv";
    std::string ret = "ret";
    std::string x = "x";
    std::string delta = "delta";
};

struct CsvFormat {
    ColumnMap columns;
    char delimiter = ',';
};

struct DroppedRow {
    std::size_t line = 0;  // 1-based line in the file, header is line 1
    std::string reason;
};

struct LoadReport {
    Panel panel;
    std::vector<DroppedRow> dropped;
};

/// Reads a delimited file with a header row. Rows with missing fields or
/// non-positive rv are dropped and reported; structural problems throw DataError.
LoadReport load_panel(const std::filesystem::path& path, const CsvFormat& format = {});
LoadReport read_panel(std::istream& in, const CsvFormat& format = {});

/// Writes the canonical schema (date,rv,ret,x,delta) with 15 significant digits.
void write_panel(std::ostream& out, const Panel& panel, char delimiter = ',');
void save_panel(const std::filesystem::path& path, const Panel& panel, char delimiter = ',');

/// Sample means over an estimation window and the covariates centered on them.
struct CenteredCovariates {
    IndexRange window;
    double x_bar = 0.0;
    double delta_bar = 0.0;
    /// Mean rv over the window; starting level of the base component.
    double init_level = 0.0;
    std::vector<double> xc;  // x_t - x_bar over the full panel
    std::vector<double> dc;  // delta_t - delta_bar over the full panel
};

CenteredCovariates center_covariates(const Panel& panel, IndexRange window);

struct AnnouncementWindow {
    std::size_t index = 0;
    Date date{};
    double rv = 0.0;
    std::size_t terms = 0;  // days averaged on each side
    double before_mean = 0.0;
    double after_mean = 0.0;
    double before_pct = 0.0;  // 100 * (before_mean - rv) / rv
    double after_pct = 0.0;
};

struct AnnouncementStats {
    int window = 0;
    std::vector<AnnouncementWindow> events;
    std::vector<std::size_t> skipped;  // announcements on the first or last day
    double mean_before_pct = 0.0;
    double mean_after_pct = 0.0;
};

/**
 * @brief Relative variation of average rv around announcement days.
 *
 * For an announcement at t the averages run over [t-w', t-1] and [t+1, t+w']
 * with w' = min(w, t, T-1-t), so both sides always use the same number of terms
 * near the sample edges. Grand averages are plain means of the per-event
 * percentages.
 */
AnnouncementStats announcement_window_stats(const Panel& panel, int window);

}  // namespace mapvol
