#pragma once

#include <filesystem>
#include <stdexcept>

#include "ncg/problems.hpp"

namespace ncg {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line) : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Reads "label index:value ..." lines with 1-based, strictly increasing
/// indices into dense rows; d is the largest index seen. Blank lines and
/// '#' comments are skipped.
NlsData load_libsvm(const std::filesystem::path& path);
NlsData parse_libsvm(std::istream& in);

/// Writes nonzero entries with 17 significant digits, which round-trips doubles.
void write_libsvm(const std::filesystem::path& path, const NlsData& data);
void write_libsvm(std::ostream& out, const NlsData& data);

}  // namespace ncg
