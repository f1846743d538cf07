#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace poisat {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class EvalError : public Error {
 public:
  EvalError(const std::string& what, std::vector<double> point);
  const std::vector<double>& point() const { return point_; }

 private:
  std::vector<double> point_;
};

// Rank differs from the value required by the construction (non-regular point,
// non-immersive chart, unclean intersection).
class RankDefect : public Error {
 public:
  RankDefect(const std::string& what, int defect) : Error(what), defect_(defect) {}
  int defect() const { return defect_; }

 private:
  int defect_;
};

// Dirac space is not the graph of a bivector.
class NotPoisson : public Error {
 public:
  NotPoisson(const std::string& what, int defect) : Error(what), defect_(defect) {}
  int defect() const { return defect_; }

 private:
  int defect_;
};

class PrerequisiteError : public Error {
 public:
  using Error::Error;
};

class FlowError : public Error {
 public:
  using Error::Error;
};

class SceneError : public Error {
 public:
  SceneError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace poisat
