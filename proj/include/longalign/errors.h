// include/longalign/errors.h

// Copyright 2026  The longalign Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace longalign {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class EmptyCorpusError : public Error { using Error::Error; };
class EmptyInputError : public Error { using Error::Error; };
class NoSpeakerMarkersError : public Error { using Error::Error; };
class DimError : public Error { using Error::Error; };
class MissingEmbeddingError : public Error { using Error::Error; };
class NoPathError : public Error { using Error::Error; };
class MissingTimingError : public Error { using Error::Error; };
class EmptyRefError : public Error { using Error::Error; };
class OrderError : public Error { using Error::Error; };
class UniverseMismatchError : public Error { using Error::Error; };

class NormalizationError : public Error {
 public:
  NormalizationError(std::size_t row, double logsum)
      : Error("posterior row " + std::to_string(row) +
              " is not normalized (logsumexp=" + std::to_string(logsum) + ")"),
        row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// Thrown when hard split constraints cannot be met; names the blocking unit.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string &what, std::string blocking)
      : Error(what), blocking_(std::move(blocking)) {}
  const std::string &blocking() const { return blocking_; }

 private:
  std::string blocking_;
};

}  // namespace longalign
