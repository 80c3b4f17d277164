#pragma once

#include <chrono>
#include <string>

#include "mhforecast/data/calendar.hpp"
#include "mhforecast/data/table.hpp"
#include "mhforecast/error.hpp"

namespace mhf::data {

/// Inclusive calendar-day interval.
struct DateRange {
  std::chrono::year_month_day first;
  std::chrono::year_month_day last;

  bool contains(HourStamp stamp) const {
    const auto day = to_days(stamp);
    return day >= std::chrono::sys_days{first} && day <= std::chrono::sys_days{last};
  }
};

struct SplitSpec {
  DateRange train;
  DateRange validation;
  DateRange test;

  /// Throws InvalidConfig unless the ranges are well formed, disjoint and ordered.
  void validate() const {
    using std::chrono::sys_days;
    for (const auto* r : {&train, &validation, &test}) {
      if (!r->first.ok() || !r->last.ok() || sys_days{r->first} > sys_days{r->last}) {
        throw Error(Errc::invalid_config, "split range is empty or malformed");
      }
    }
    if (!(sys_days{train.last} < sys_days{validation.first} &&
          sys_days{validation.last} < sys_days{test.first})) {
      throw Error(Errc::invalid_config, "split ranges must be disjoint and ordered train < validation < test");
    }
  }
};

struct Splits {
  TimeSeriesTable train;
  TimeSeriesTable validation;
  TimeSeriesTable test;
};

inline Splits split_by_date(const TimeSeriesTable& table, const SplitSpec& spec) {
  spec.validate();
  Splits out;
  for (auto* part : {&out.train, &out.validation, &out.test}) part->columns = table.columns;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const HourStamp stamp = table.timestamps[r];
    TimeSeriesTable* dest = spec.train.contains(stamp)        ? &out.train
                            : spec.validation.contains(stamp) ? &out.validation
                            : spec.test.contains(stamp)       ? &out.test
                                                              : nullptr;
    if (dest) dest->append_row(stamp, table.row(r));
  }
  auto require = [](const TimeSeriesTable& t, const char* name) {
    if (t.rows() == 0) throw Error(Errc::empty_split, std::string(name) + " range captures zero rows");
  };
  require(out.train, "train");
  require(out.validation, "validation");
  require(out.test, "test");
  return out;
}

}  // namespace mhf::data
