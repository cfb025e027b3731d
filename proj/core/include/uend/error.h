// Copyright 2026 The uend Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef UEND_ERROR_H_
#define UEND_ERROR_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace uend {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument violates an operation's precondition.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. `offset` is the byte (or line, for text formats)
// position where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& message, std::uint64_t offset)
      : Error(message + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

// A quantity is undefined for the given input, e.g. a silhouette score over
// a single cluster.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

// Training diverged or otherwise failed mid-run.
class RunError : public Error {
 public:
  RunError(const std::string& message, int epoch)
      : Error(message + " (epoch " + std::to_string(epoch) + ")"),
        epoch_(epoch) {}

  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

// Invalid experiment configuration; `field` is the dotted path of the
// offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : Error(field + ": " + message), field_(field) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace uend

#endif  // UEND_ERROR_H_
