//------------------------------------------------------------------------------
//
//   Copyright 2026 The fedcdc-market Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedcdc {

// Tensor or matrix dimensions disagree with what an operation expects.
class ShapeError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

// Scenario / partition / mechanism parameters that cannot be realised.
class ConfigError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

// Binary or text input that does not follow its declared format.
class ParseError : public std::runtime_error
{
public:
  ParseError(std::string const &what, std::size_t offset)
    : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")")
    , offset_(offset)
  {}

  std::size_t offset() const noexcept
  {
    return offset_;
  }

private:
  std::size_t offset_;
};

}  // namespace fedcdc
