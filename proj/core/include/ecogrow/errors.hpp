#pragma once

#include <stdexcept>
#include <string>

namespace ecogrow {

// Input data or a request violated a contract (bad file, bad value, bad shape).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A computation failed after its inputs were accepted (non-finite loss,
// io failure mid-run, missing upstream artifact).
class PipelineError : public std::runtime_error {
 public:
  explicit PipelineError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ecogrow
