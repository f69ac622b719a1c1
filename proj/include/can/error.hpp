#pragma once

#include <stdexcept>
#include <string>

namespace can {

enum class errc {
  file_not_found,
  file_write_failed,
  png_unsupported,   // bit depth or color type outside 8-bit gray/RGB
  png_malformed,
  bad_argument,
  dimension_mismatch,
  bad_magic,
  bad_version,
  truncated_stream,
  non_finite_value,
  solver_failure,
  divergence,
  empty_dataset,
};

class Error : public std::runtime_error {
public:
  Error(errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  errc code() const noexcept { return code_; }

private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string &msg) { throw Error(code, msg); }

} // namespace can
