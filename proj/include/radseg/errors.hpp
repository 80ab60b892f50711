/* Copyright 2026 The radseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef RADSEG_ERRORS_HPP_
#define RADSEG_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace radseg {

// Problems with caller-supplied data: files, shapes, arguments. The CLI maps
// these to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Container decoding failures (bad magic, truncation, unsupported version).
class FormatError : public InputError {
 public:
  using InputError::InputError;
};

class ShapeError : public InputError {
 public:
  using InputError::InputError;
};

// An internal invariant did not hold. The CLI maps these to exit code 2.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace radseg

#endif  // RADSEG_ERRORS_HPP_
