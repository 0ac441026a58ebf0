// Copyright (C) 2026 The pingpong Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace pingpong {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A scalar parameter outside its admissible range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A timestep or component index outside the valid domain.
class IndexError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or a division that would blow up.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, int t) : Error(what + " (t=" + std::to_string(t) + ")"), t_(t) {}
  int t() const { return t_; }

 private:
  int t_;
};

/// A reverse step requested below t=0, or a composite that runs out of steps.
class StepError : public Error {
 public:
  using Error::Error;
};

/// Every effective mixture weight is zero.
class EmptySupportError : public Error {
 public:
  using Error::Error;
};

/// An operation invoked outside its calling contract.
class ContractError : public Error {
 public:
  using Error::Error;
};

class RemoteError : public Error {
 public:
  RemoteError(const std::string& endpoint, int t, const std::string& detail, const std::string& excerpt = {})
      : Error("remote call to " + endpoint + " failed at t=" + std::to_string(t) + ": " + detail +
              (excerpt.empty() ? std::string{} : " [" + excerpt + "]")),
        endpoint_(endpoint),
        t_(t),
        excerpt_(excerpt) {}
  const std::string& endpoint() const { return endpoint_; }
  int t() const { return t_; }
  const std::string& excerpt() const { return excerpt_; }

 private:
  std::string endpoint_;
  int t_;
  std::string excerpt_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw) : Error(what), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

}  // namespace pingpong
