/*
 * Copyright 2026 The SMS Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace sms {

// Error categories map onto CLI exit codes: usage 1, data 2, numeric 3.
enum class ErrorKind { kUsage, kData, kNumeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& w) : Error(ErrorKind::kUsage, w) {}
};

// Model or run configuration inconsistent with itself or with the data.
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::kUsage, w) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error(ErrorKind::kUsage, w) {}
};

struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorKind::kData, w) {}
};

struct ParseError : DataError {
  using DataError::DataError;
};

struct SpanError : DataError {
  using DataError::DataError;
};

struct LookupError : DataError {
  using DataError::DataError;
};

struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorKind::kNumeric, w) {}
};

}  // namespace sms
