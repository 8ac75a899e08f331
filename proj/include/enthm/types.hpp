#pragma once

#include <chrono>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace enthm {

/// Minute-resolution wall-clock instant. The meters report local time; no
/// time zone conversion is applied anywhere.
using Timestamp = std::chrono::sys_time<std::chrono::minutes>;

Timestamp make_timestamp(int year, unsigned month, unsigned day, unsigned hour = 0,
                         unsigned minute = 0);

/// "YYYY-MM-DDTHH:MM"
std::string format_iso(Timestamp t);

/// Accepts "YYYY-MM-DDTHH:MM", "YYYY-MM-DD HH:MM" and a bare "YYYY-MM-DD".
Timestamp parse_iso(std::string_view text);

/// Same calendar month, day and time one year earlier; 29 Feb maps to 28 Feb.
Timestamp shift_back_one_year(Timestamp t);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class WindowIncompleteError : public Error {
 public:
  using Error::Error;
};

class OutOfOrderError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct Reading {
  Timestamp timestamp;
  double intensity = 0.0;  // amperes

  friend bool operator==(const Reading&, const Reading&) = default;
};

/// Throws InvalidArgument unless the intensity is finite and non-negative.
void validate(const Reading& r);

/// Provider-set operating range: b > i_b > a >= 0.
struct CurrentLimits {
  double a = 0.0;    // lower ("NULL") limit
  double i_b = 5.0;  // basic current
  double b = 30.0;   // I_MAX

  void validate() const;

  friend bool operator==(const CurrentLimits&, const CurrentLimits&) = default;
};

}  // namespace enthm
