// Copyright 2026 The hypex Authors
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

#ifndef HYPEX_ERROR_H_
#define HYPEX_ERROR_H_

#include <stdexcept>
#include <string>

namespace hypex {

// Broad failure classes. The CLI maps each one to a distinct exit status.
enum class ErrorKind {
  kUsage,     // bad configuration or incompatible options
  kData,      // unreadable or malformed input
  kNumeric,   // singular systems, non-convergence, empty designs
  kBlinding,  // outcome access without a matching design lock
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

#define HYPEX_DEFINE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

// Data ingestion.
HYPEX_DEFINE_ERROR(SchemaError, kData)
HYPEX_DEFINE_ERROR(ParseError, kData)
HYPEX_DEFINE_ERROR(EmptyInputError, kData)
HYPEX_DEFINE_ERROR(ConsistencyError, kData)

// Numerical kernels and design construction.
HYPEX_DEFINE_ERROR(SingularMatrixError, kNumeric)
HYPEX_DEFINE_ERROR(DivergenceError, kNumeric)
HYPEX_DEFINE_ERROR(SeparationError, kNumeric)
HYPEX_DEFINE_ERROR(NestingViolationError, kNumeric)
HYPEX_DEFINE_ERROR(DomainError, kNumeric)
HYPEX_DEFINE_ERROR(InfeasibleError, kNumeric)
HYPEX_DEFINE_ERROR(EmptyDesignError, kNumeric)
HYPEX_DEFINE_ERROR(UndefinedSmdError, kNumeric)
HYPEX_DEFINE_ERROR(VarianceUndefinedError, kNumeric)
HYPEX_DEFINE_ERROR(DegeneratePosteriorError, kNumeric)
HYPEX_DEFINE_ERROR(CriterionTooTightError, kNumeric)
HYPEX_DEFINE_ERROR(NotApplicableError, kNumeric)

// Configuration.
HYPEX_DEFINE_ERROR(ConfigurationError, kUsage)

// Blinding.
HYPEX_DEFINE_ERROR(TamperError, kBlinding)
HYPEX_DEFINE_ERROR(BlindingViolationError, kBlinding)

#undef HYPEX_DEFINE_ERROR

}  // namespace hypex

#endif  // HYPEX_ERROR_H_
