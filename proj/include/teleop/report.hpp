#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "teleop/metrics.hpp"
#include "teleop/run_log.hpp"

namespace teleop {

/// Traversal time and collisions of the last finished run in a log, or
/// nullopt if no run finished.
std::optional<RunSummary> summarize_run(const RunLog& log);

struct ReportBundle {
  std::map<std::string, std::string> files;  // file name -> contents
  std::vector<std::string> warnings;
};

/// Text tables plus plot-ready column files: overall RTLX per participant,
/// one file per subscale, time differences and subscale means.
/// Throws IncompleteData when a participant with runs lacks one modality.
ReportBundle build_report(const std::vector<RunLog>& logs, const std::vector<ParticipantRecord>& participants,
                          const std::vector<TlxRecord>& tlx);

}  // namespace teleop
