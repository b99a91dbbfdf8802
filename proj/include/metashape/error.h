#ifndef METASHAPE_ERROR_H_
#define METASHAPE_ERROR_H_

#include <stdexcept>
#include <string>

namespace metashape {

// Input data or configuration that violates a documented contract.
// The CLI maps it to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed record in a line-delimited input file.
class RecordError : public ValidationError {
 public:
  RecordError(const std::string& source, size_t line, const std::string& field,
              const std::string& what)
      : ValidationError(source + ":" + std::to_string(line) + ": field '" +
                        field + "': " + what),
        line_(line),
        field_(field) {}

  size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  size_t line_;
  std::string field_;
};

}  // namespace metashape

#endif  // METASHAPE_ERROR_H_
