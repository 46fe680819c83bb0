// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace atris
{

/// Base of every exception thrown by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// A value violated one of its type's invariants.
class InvariantError : public Error
{
  public:
    using Error::Error;
};

/// A structured record could not be decoded.
class DecodeError : public Error
{
  public:
    DecodeError(std::size_t position, const std::string& what):
        Error("decode error at byte " + std::to_string(position) + ": " + what), _position(position)
    {
    }

    [[nodiscard]] auto position() const noexcept -> std::size_t { return _position; }

  private:
    std::size_t _position;
};

/// Invalid run/task/job configuration. The message names the offending field path.
class ConfigError : public Error
{
  public:
    using Error::Error;
};

} // namespace atris
