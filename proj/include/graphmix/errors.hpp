// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace graphmix {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input record. `line()` is 1-based; 0 when not tied to a file line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a data-model invariant.
class ValidationError : public Error {
 public:
  ValidationError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ValidationError(const std::string& what) : ValidationError(0, what) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// A masking group was requested that needs inputs the sample does not carry.
class MaskingError : public Error {
 public:
  using Error::Error;
};

/// A single graph does not fit an empty pack.
class OversizeError : public Error {
 public:
  OversizeError(std::size_t graph_id, const std::string& what)
      : Error("graph " + std::to_string(graph_id) + ": " + what), graph_id_(graph_id) {}
  std::size_t graph_id() const noexcept { return graph_id_; }

 private:
  std::size_t graph_id_;
};

/// Checkpoint or prediction file that cannot be read back against its config.
class LoadError : public Error {
 public:
  using Error::Error;
};

}  // namespace graphmix
