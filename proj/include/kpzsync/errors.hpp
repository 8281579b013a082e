#ifndef KPZSYNC_ERRORS_HPP
#define KPZSYNC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace kpzsync {

/// Process exit codes used by the CLI: 0 ok, 2 config, 3 numerical, 4 I/O.
enum class ExitCode : int { Ok = 0, Config = 2, Numerical = 3, Io = 4 };

/// Base error carrying the exit-code category it maps to.
class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

struct GridMismatch : Error {
  explicit GridMismatch(const std::string& msg) : Error(ExitCode::Numerical, msg) {}
};

struct NonPositiveInput : Error {
  explicit NonPositiveInput(const std::string& msg) : Error(ExitCode::Numerical, msg) {}
};

struct NonPositiveKernel : Error {
  explicit NonPositiveKernel(const std::string& msg) : Error(ExitCode::Numerical, msg) {}
};

struct EmbeddingNotPSD : Error {
  explicit EmbeddingNotPSD(const std::string& msg) : Error(ExitCode::Numerical, msg) {}
};

struct StepTooLarge : Error {
  explicit StepTooLarge(const std::string& msg) : Error(ExitCode::Numerical, msg) {}
};

struct TimeNotStored : Error {
  explicit TimeNotStored(const std::string& msg) : Error(ExitCode::Numerical, msg) {}
};

struct NoConvergence : Error {
  explicit NoConvergence(const std::string& msg) : Error(ExitCode::Numerical, msg) {}
};

struct WindowNotMaterialized : Error {
  explicit WindowNotMaterialized(const std::string& msg) : Error(ExitCode::Numerical, msg) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error(ExitCode::Config, msg) {}
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& msg) : Error(ExitCode::Config, msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(ExitCode::Io, msg) {}
};

struct MissingOutput : Error {
  explicit MissingOutput(const std::string& msg) : Error(ExitCode::Io, msg) {}
};

}  // namespace kpzsync

#endif
