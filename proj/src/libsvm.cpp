#include "ncg/libsvm.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

namespace ncg {

namespace {

double parse_double(std::string_view tok, std::size_t line, const char* what) {
  double v = 0.0;
  if (tok.size() > 1 && tok.front() == '+') tok.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(fmt::format("line {}: invalid {} '{}'", line, what, tok), line);
  }
  return v;
}

}  // namespace

NlsData parse_libsvm(std::istream& in) {
  struct Row {
    double label;
    std::vector<std::pair<std::size_t, double>> entries;
  };
  std::vector<Row> rows;
  std::size_t dim = 0;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (const auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);
    std::istringstream ls(text);
    std::string tok;
    if (!(ls >> tok)) continue;
    Row row{parse_double(tok, line, "label"), {}};
    std::size_t last = 0;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError(fmt::format("line {}: expected index:value, got '{}'", line, tok), line);
      std::size_t idx = 0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + colon, idx);
      if (ec != std::errc() || ptr != tok.data() + colon || idx == 0) {
        throw ParseError(fmt::format("line {}: invalid feature index '{}'", line, tok.substr(0, colon)), line);
      }
      if (idx <= last) throw ParseError(fmt::format("line {}: feature indices must be strictly increasing", line), line);
      last = idx;
      row.entries.emplace_back(idx, parse_double(std::string_view(tok).substr(colon + 1), line, "feature value"));
    }
    dim = std::max(dim, last);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("empty LIBSVM input", line);
  if (dim == 0) throw ParseError("LIBSVM input has no features", line);
  NlsData data;
  data.a = RowMatrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  data.b.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    data.b[r] = rows[i].label;
    for (const auto& [idx, v] : rows[i].entries) data.a(r, static_cast<Eigen::Index>(idx - 1)) = v;
  }
  return data;
}

NlsData load_libsvm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_libsvm(in);
}

void write_libsvm(std::ostream& out, const NlsData& data) {
  for (Eigen::Index i = 0; i < data.a.rows(); ++i) {
    out << fmt::format("{:.17g}", data.b[i]);
    for (Eigen::Index j = 0; j < data.a.cols(); ++j) {
      if (data.a(i, j) != 0.0) out << fmt::format(" {}:{:.17g}", j + 1, data.a(i, j));
    }
    out << '\n';
  }
}

void write_libsvm(const std::filesystem::path& path, const NlsData& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_libsvm(out, data);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace ncg
