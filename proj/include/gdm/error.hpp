#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gdm {

enum class ErrorKind {
  labeled_data_required,
  index,
  invalid_graph,
  invalid_data,
  insufficient_samples,
  dimension,
  degenerate_subject,
  infeasible,
  assembly,
  protocol,
  split,
  degenerate_labels,
  parameter,
  too_sparse,
  format,
  io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::labeled_data_required: return "labeled-data-required";
    case ErrorKind::index: return "index";
    case ErrorKind::invalid_graph: return "invalid-graph";
    case ErrorKind::invalid_data: return "invalid-data";
    case ErrorKind::insufficient_samples: return "insufficient-samples";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::degenerate_subject: return "degenerate-subject";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::assembly: return "assembly";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::split: return "split";
    case ErrorKind::degenerate_labels: return "degenerate-labels";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::too_sparse: return "too-sparse";
    case ErrorKind::format: return "format";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace gdm
