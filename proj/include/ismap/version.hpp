#pragma once

namespace ismap {

inline constexpr const char* kVersion = "0.1.0";

// Bumped when the on-disk layout of the respective artifact changes.
inline constexpr int kTableCsvFormat = 1;
inline constexpr int kReportFormat = 1;
inline constexpr int kCheckpointFormat = 1;

}  // namespace ismap
