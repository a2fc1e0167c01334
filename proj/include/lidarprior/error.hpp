/*
 * Copyright 2026 The lidarprior Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LIDARPRIOR_ERROR_HPP
#define LIDARPRIOR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lidarprior {

// Input/configuration problems: unreadable files, malformed records, bad
// config values. The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

class VersionError : public InputError {
 public:
  using InputError::InputError;
};

// Numeric or algorithmic failure inside the pipeline (exit code 3).
class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public PipelineError {
 public:
  using PipelineError::PipelineError;
};

class DegenerateError : public PipelineError {
 public:
  using PipelineError::PipelineError;
};

}  // namespace lidarprior

#endif  // LIDARPRIOR_ERROR_HPP
