#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cexrepair {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised by the Verus surface parser; carries the byte offset and 1-based position.
class ParseError : public Error {
  public:
    ParseError(const std::string &what, std::size_t offset = 0, int line = 0, int col = 0)
        : Error(line > 0 ? what + " at " + std::to_string(line) + ":" + std::to_string(col) : what),
          offset_(offset), line_(line), col_(col)
    {
    }
    std::size_t offset() const { return offset_; }
    int line() const { return line_; }
    int col() const { return col_; }

  private:
    std::size_t offset_;
    int line_;
    int col_;
};

class VerifierNotFound : public Error {
  public:
    using Error::Error;
};

class WorkspaceError : public Error {
  public:
    using Error::Error;
};

class EmptyDiagnostics : public Error {
  public:
    EmptyDiagnostics() : Error("diagnostic list is empty") {}
};

class UnsupportedLoop : public Error {
  public:
    using Error::Error;
};

class MissingAssignment : public Error {
  public:
    explicit MissingAssignment(const std::string &name)
        : Error("no assignment for live variable `" + name + "`"), name_(name)
    {
    }
    const std::string &name() const { return name_; }

  private:
    std::string name_;
};

class TypeRenderError : public Error {
  public:
    TypeRenderError(const std::string &name, const std::string &why)
        : Error("cannot render `" + name + "`: " + why), name_(name)
    {
    }
    const std::string &name() const { return name_; }

  private:
    std::string name_;
};

class NotVerified : public Error {
  public:
    using Error::Error;
};

class MissingBinding : public Error {
  public:
    explicit MissingBinding(const std::string &name) : Error("missing template binding `" + name + "`"), name_(name) {}
    const std::string &name() const { return name_; }

  private:
    std::string name_;
};

class ProviderError : public Error {
  public:
    using Error::Error;
};

/// Connection failures and 5xx responses; retried like RateLimited.
class TransportError : public ProviderError {
  public:
    using ProviderError::ProviderError;
};

class RateLimited : public ProviderError {
  public:
    using ProviderError::ProviderError;
};

class AuthError : public ProviderError {
  public:
    using ProviderError::ProviderError;
};

class NoCodeBlock : public Error {
  public:
    NoCodeBlock() : Error("completion contains no matching fenced code block") {}
};

class RunnerUnavailable : public Error {
  public:
    using Error::Error;
};

class RangeViolation : public Error {
  public:
    RangeViolation(const std::string &name, const std::string &type)
        : Error("value of `" + name + "` is outside the range of " + type), name_(name), type_(type)
    {
    }
    const std::string &name() const { return name_; }
    const std::string &type() const { return type_; }

  private:
    std::string name_;
    std::string type_;
};

class NonContiguousVector : public Error {
  public:
    explicit NonContiguousVector(const std::string &name)
        : Error("vector `" + name + "` has non-contiguous element indices"), name_(name)
    {
    }
    const std::string &name() const { return name_; }

  private:
    std::string name_;
};

class MalformedAggregate : public Error {
  public:
    explicit MalformedAggregate(const std::string &name) : Error("malformed aggregate value for `" + name + "`"), name_(name)
    {
    }
    const std::string &name() const { return name_; }

  private:
    std::string name_;
};

class NoViableMutant : public Error {
  public:
    NoViableMutant() : Error("no compilable, specification-preserving mutant") {}
};

class TaskSetupError : public Error {
  public:
    using Error::Error;
};

class DatasetNotFound : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

} // namespace cexrepair
