#include <eiv/bench/csv.hpp>

#include <eiv/bench/config.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace eiv::bench {
namespace fs = std::filesystem;

namespace {

struct Header {
  Index rows;
  Index cols;
};

Header parse_header(const std::string& line, const fs::path& path) {
  long rows = -1;
  long cols = -1;
  if (std::sscanf(line.c_str(), "# rows=%ld cols=%ld", &rows, &cols) != 2 || rows < 0 ||
      cols < 0) {
    throw IoError(path.string() + ": missing '# rows=<n> cols=<m>' header");
  }
  return {rows, cols};
}

template <typename Cell>
void read_cells(const fs::path& path, Cell&& cell, Header& header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  header = parse_header(line, path);
  cell(-1, -1, std::string_view{});
  for (Index i = 0; i < header.rows; ++i) {
    if (!std::getline(in, line)) {
      throw IoError(path.string() + ": expected " + std::to_string(header.rows) + " rows");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header.cols == 0) continue;
    Index j = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view token(line.data() + start,
                                   (comma == std::string::npos ? line.size() : comma) - start);
      if (j >= header.cols) {
        throw IoError(path.string() + ": too many columns in row " + std::to_string(i + 1));
      }
      cell(i, j++, token);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (j != header.cols) {
      throw IoError(path.string() + ": too few columns in row " + std::to_string(i + 1));
    }
  }
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_matrix(const fs::path& path, const Matrix<double>& m) {
  std::string text = "# rows=" + std::to_string(m.rows()) +
                     " cols=" + std::to_string(m.cols()) + "\n";
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) text += ',';
      text += format_double(m(i, j));
    }
    text += '\n';
  }
  write_text(path, text);
}

Matrix<double> read_matrix(const fs::path& path) {
  Matrix<double> m;
  Header header{0, 0};
  read_cells(
      path,
      [&](Index i, Index j, std::string_view token) {
        if (i < 0) {
          m.resize(header.rows, header.cols);
          return;
        }
        double x = 0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), x);
        if (ec != std::errc() || ptr != token.data() + token.size()) {
          throw IoError(path.string() + ": bad number '" + std::string(token) + "'");
        }
        m(i, j) = x;
      },
      header);
  return m;
}

void write_mask(const fs::path& path, const MissingMask& mask) {
  std::string text = "# rows=" + std::to_string(mask.rows()) +
                     " cols=" + std::to_string(mask.cols()) + "\n";
  for (Index i = 0; i < mask.rows(); ++i) {
    for (Index j = 0; j < mask.cols(); ++j) {
      if (j) text += ',';
      text += mask(i, j) ? '1' : '0';
    }
    text += '\n';
  }
  write_text(path, text);
}

MissingMask read_mask(const fs::path& path) {
  MissingMask mask;
  Header header{0, 0};
  read_cells(
      path,
      [&](Index i, Index j, std::string_view token) {
        if (i < 0) {
          mask.resize(header.rows, header.cols);
          return;
        }
        if (token != "0" && token != "1") {
          throw IoError(path.string() + ": mask entries must be 0 or 1");
        }
        mask(i, j) = token == "1";
      },
      header);
  return mask;
}

}  // namespace eiv::bench
