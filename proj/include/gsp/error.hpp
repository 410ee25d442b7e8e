#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gsp {

enum class Errc {
  invalid_grid,
  balanced_design,
  config,
  auth,
  experiment_closed,
  duplicate,
  expired,
  not_found,
  arity,
  state,
  empty_experiment,
  shape,
  render_backend,
  batch,
  corrupt_log,
  phase,
  range,
  conditioning,
  size,
  degenerate_variance,
  undefined_correlation,
  stratification,
  feature_schema,
  io,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Raised when an event log has a sequence gap, an unparsable line or a CRC
/// mismatch. `seq()` is the first sequence number that could not be trusted.
class CorruptLogError : public Error {
 public:
  CorruptLogError(std::uint64_t seq, const std::string& what)
      : Error(Errc::corrupt_log, "event " + std::to_string(seq) + ": " + what), seq_(seq) {}

  std::uint64_t seq() const noexcept { return seq_; }

 private:
  std::uint64_t seq_;
};

class BatchError : public Error {
 public:
  BatchError(std::vector<int> failed, const std::string& what)
      : Error(Errc::batch, what), failed_(std::move(failed)) {}

  const std::vector<int>& failed_indices() const noexcept { return failed_; }

 private:
  std::vector<int> failed_;
};

}  // namespace gsp
