#pragma once

#include <stdexcept>
#include <string>

namespace survdro {

// Invalid configuration, schema, or contract violation supplied by the
// caller. The CLI maps this family to exit code 2.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file contents (bad cell, bad header). Exit code 2.
class parse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension mismatch between a model and the data fed to it.
class shape_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runtime numerical failure (non-finite loss or gradient, degenerate
// weights). Exit code 1.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The eta subproblem could not be bracketed within the expansion budget.
class solver_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A metric has no defined value on the given data (e.g. a group with no
// comparable pairs). Reported as NA by callers that can; fatal otherwise.
class undefined_metric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace survdro
