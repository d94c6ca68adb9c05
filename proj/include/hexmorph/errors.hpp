#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hexmorph {

enum class ErrorKind {
  config,
  format,
  unsupported,
  io,
  data,
  degenerate_input,
  out_of_domain,
  incompatible_grids,
  undefined_metric,
  optimization_failure,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; the kind selects the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Error(ErrorKind kind, const std::string& what, std::vector<std::int64_t> indices)
      : std::runtime_error(what), kind_(kind), indices_(std::move(indices)) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Offending element/node/voxel indices, when the error names any.
  const std::vector<std::int64_t>& indices() const noexcept { return indices_; }

 private:
  ErrorKind kind_;
  std::vector<std::int64_t> indices_;
};

// 0 success, 1 usage/config, 2 data/format, 3 numerical failure.
int exit_code_for(ErrorKind kind);

}  // namespace hexmorph
