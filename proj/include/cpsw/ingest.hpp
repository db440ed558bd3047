#pragma once

#include <string>

#include "cpsw/core.hpp"

namespace cpsw {

// Historian CSV: `Timestamp,<feature names...>[,Status]`, one row per second,
// UTF-8, comma separated, ISO-8601 timestamps, values with 6 decimal places.
TimeSeries read_historian_csv(const std::string& path, const FeatureSchema& schema);

// Writes labels as a Status column when the series carries them (or always
// omits the column when include_status is false).
void write_historian_csv(const TimeSeries& series, const FeatureSchema& schema,
                         const std::string& path, bool include_status = true);

}  // namespace cpsw
