#ifndef POMP_ERRORS_HPP_
#define POMP_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace pomp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownToken : public Error {
 public:
  UnknownToken(int position, std::string lexeme)
      : Error("unknown token '" + lexeme + "' at position " +
              std::to_string(position)),
        position_(position),
        lexeme_(std::move(lexeme)) {}
  int position() const { return position_; }
  const std::string& lexeme() const { return lexeme_; }

 private:
  int position_;
  std::string lexeme_;
};

class SyntaxError : public Error {
 public:
  SyntaxError(int position, std::string expected, std::string found)
      : Error("syntax error at position " + std::to_string(position) +
              ": expected " + expected + ", found '" + found + "'"),
        position_(position),
        expected_(std::move(expected)),
        found_(std::move(found)) {}
  int position() const { return position_; }
  const std::string& expected() const { return expected_; }
  const std::string& found() const { return found_; }

 private:
  int position_;
  std::string expected_;
  std::string found_;
};

class EpisodeAlreadyDone : public Error {
 public:
  EpisodeAlreadyDone() : Error("episode already done") {}
};

class UnsupportedScale : public Error {
 public:
  using Error::Error;
};

class ZeroVector : public Error {
 public:
  ZeroVector() : Error("zero-norm latent vector") {}
};

class DivergenceDetected : public Error {
 public:
  using Error::Error;
};

class NotCalibrated : public Error {
 public:
  NotCalibrated() : Error("quantizer used before calibration") {}
  using Error::Error;
};

class CheckpointMismatch : public Error {
 public:
  using Error::Error;
};

class MissingLog : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace pomp

#endif  // POMP_ERRORS_HPP_
