#include "fes/nn/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "fes/errors.hpp"

namespace fes::nn {

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& tok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    // from_chars rejects "inf"/"nan" spellings produced elsewhere
    if (tok == "inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    throw DataError("checkpoint: bad number '" + tok + "'");
  }
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  os << kCheckpointMagic << '\n';
  for (const auto& [k, v] : ckpt.meta) {
    if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos)
      throw DataError("checkpoint: meta key/value contains whitespace: '" + k + "'");
    os << "meta " << k << ' ' << v << '\n';
  }
  for (const auto& [name, e] : ckpt.params.entries()) {
    os << "tensor " << name << ' ' << e.rank << ' ' << e.value.rows() << ' ' << e.value.cols() << '\n';
    for (Eigen::Index i = 0; i < e.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < e.value.cols(); ++j) {
        if (j) os << ' ';
        os << format_double(e.value(i, j));
      }
      os << '\n';
    }
  }
  os << "end\n";
}

Checkpoint read_checkpoint(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCheckpointMagic)
    throw DataError("checkpoint: missing magic '" + std::string(kCheckpointMagic) + "'");
  Checkpoint ckpt;
  bool ended = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "end") {
      ended = true;
      break;
    }
    if (kind == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      ckpt.meta[key] = value;
    } else if (kind == "tensor") {
      std::string name;
      int rank = 0;
      Eigen::Index rows = 0, cols = 0;
      if (!(ls >> name >> rank >> rows >> cols) || rows < 0 || cols < 0)
        throw DataError("checkpoint: malformed tensor header: " + line);
      Eigen::MatrixXd m(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
          std::string tok;
          if (!(is >> tok)) throw DataError("checkpoint: truncated tensor '" + name + "'");
          m(i, j) = parse_double(tok);
        }
      }
      ckpt.params.add(name, std::move(m), rank);
    } else {
      throw DataError("checkpoint: unknown record '" + kind + "'");
    }
  }
  if (!ended) throw DataError("checkpoint: missing 'end' record");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write checkpoint " + path.string());
  write_checkpoint(os, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path.string());
  return read_checkpoint(is);
}

}  // namespace fes::nn
