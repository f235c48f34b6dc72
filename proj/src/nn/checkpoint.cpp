#include "exid/nn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "exid/common/csv.hpp"
#include "exid/common/error.hpp"

namespace exid::nn {
namespace {

constexpr const char* kMagic = "exid-mlp";
constexpr int kVersion = 1;

struct LineReader {
  std::istream& in;
  int line_no = 0;

  std::vector<std::string> next() {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      for (std::string tok; ss >> tok;) tokens.push_back(tok);
      if (!tokens.empty()) return tokens;
    }
    throw ParseError("unexpected end of checkpoint", line_no);
  }
};

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
  const auto& p = checkpoint.params;
  p.validate();
  out << kMagic << ' ' << kVersion << '\n';
  for (const auto& [key, value] : checkpoint.meta) {
    if (key.find_first_of(" \t\n") != std::string::npos || value.find_first_of(" \t\n") != std::string::npos) {
      throw UsageError("checkpoint metadata may not contain whitespace");
    }
    out << "meta " << key << ' ' << value << '\n';
  }
  out << "dropout " << format_double(p.dropout_rate) << '\n';
  out << "layers " << p.layer_sizes.size();
  for (int s : p.layer_sizes) out << ' ' << s;
  out << '\n';
  for (const auto& layer : p.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      out << 'w';
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) out << ' ' << format_double(layer.weight(r, c));
      out << '\n';
    }
    out << 'b';
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) out << ' ' << format_double(layer.bias(i));
    out << '\n';
  }
  out << "end\n";
}

Checkpoint read_checkpoint(std::istream& in) {
  LineReader reader{in};
  auto tokens = reader.next();
  if (tokens.size() != 2 || tokens[0] != kMagic) throw ParseError("not an exid-mlp checkpoint", reader.line_no);
  if (parse_int(tokens[1], reader.line_no) != kVersion) {
    throw ParseError("unsupported checkpoint version " + tokens[1], reader.line_no);
  }

  Checkpoint cp;
  double dropout = 0.0;
  tokens = reader.next();
  while (tokens[0] == "meta") {
    if (tokens.size() != 3) throw ParseError("meta lines need a key and a value", reader.line_no);
    cp.meta[tokens[1]] = tokens[2];
    tokens = reader.next();
  }
  if (tokens[0] != "dropout" || tokens.size() != 2) throw ParseError("expected 'dropout <rate>'", reader.line_no);
  dropout = parse_double(tokens[1], reader.line_no);

  tokens = reader.next();
  if (tokens[0] != "layers" || tokens.size() < 2) throw ParseError("expected 'layers <n> <sizes...>'", reader.line_no);
  const auto count = parse_int(tokens[1], reader.line_no);
  if (count < 2 || static_cast<long long>(tokens.size()) != count + 2) {
    throw ParseError("layer size list does not match its count", reader.line_no);
  }
  std::vector<int> sizes;
  for (long long i = 0; i < count; ++i) {
    const auto s = parse_int(tokens[static_cast<std::size_t>(i + 2)], reader.line_no);
    if (s <= 0) throw ParseError("layer sizes must be positive", reader.line_no);
    sizes.push_back(static_cast<int>(s));
  }

  cp.params = MlpParams::zeros(sizes, 0.0);
  for (auto& layer : cp.params.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      tokens = reader.next();
      if (tokens[0] != "w" || static_cast<Eigen::Index>(tokens.size()) != layer.weight.cols() + 1) {
        throw ParseError("malformed weight row", reader.line_no);
      }
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = parse_double(tokens[static_cast<std::size_t>(c + 1)], reader.line_no);
      }
    }
    tokens = reader.next();
    if (tokens[0] != "b" || static_cast<Eigen::Index>(tokens.size()) != layer.bias.size() + 1) {
      throw ParseError("malformed bias row", reader.line_no);
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      layer.bias(i) = parse_double(tokens[static_cast<std::size_t>(i + 1)], reader.line_no);
    }
  }
  tokens = reader.next();
  if (tokens.size() != 1 || tokens[0] != "end") throw ParseError("expected 'end'", reader.line_no);
  cp.params.dropout_rate = dropout;
  cp.params.validate();
  return cp;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, checkpoint);
  if (!out) throw Error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace exid::nn
