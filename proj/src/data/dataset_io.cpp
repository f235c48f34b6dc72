#include <fstream>
#include <map>
#include <sstream>

#include "exid/common/csv.hpp"
#include "exid/common/error.hpp"
#include "exid/data/dataset.hpp"

namespace exid::data {
namespace {

constexpr const char* kMagic = "exid-dataset";
constexpr int kVersion = 1;

}  // namespace

void write_dataset(std::ostream& out, const Dataset& dataset) {
  out << kMagic << ' ' << kVersion << " env_id=" << dataset.env_id << " kind=" << to_string(dataset.kind)
      << " obs_dim=" << dataset.obs_dim << " n_actions=" << dataset.n_actions << " count=" << dataset.size()
      << " seed=" << dataset.meta.seed;
  if (dataset.meta.epsilon) out << " epsilon=" << format_double(*dataset.meta.epsilon);
  if (dataset.meta.source_score) out << " source_score=" << format_double(*dataset.meta.source_score);
  out << '\n';
  std::string line;
  for (const auto& t : dataset.transitions) {
    line.clear();
    for (double v : t.s) line += format_double(v) + ' ';
    line += std::to_string(t.a) + ' ' + format_double(t.r);
    for (double v : t.s_next) line += ' ' + format_double(v);
    line += t.done ? " 1\n" : " 0\n";
    out << line;
  }
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line)) throw ParseError("empty dataset file", line_no);
  std::istringstream header(line);
  std::string magic;
  int version = 0;
  header >> magic >> version;
  if (magic != kMagic) throw ParseError("not an exid dataset file", line_no);
  if (version != kVersion) throw ParseError("unsupported dataset version " + std::to_string(version), line_no);

  std::map<std::string, std::string> fields;
  for (std::string tok; header >> tok;) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ParseError("malformed header field '" + tok + "'", line_no);
    fields[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto field = [&](const std::string& key) -> const std::string& {
    const auto it = fields.find(key);
    if (it == fields.end()) throw ParseError("header is missing '" + key + "'", line_no);
    return it->second;
  };

  Dataset d;
  d.env_id = field("env_id");
  try {
    d.kind = parse_kind(field("kind"));
  } catch (const UsageError& e) {
    throw ParseError(e.what(), line_no);
  }
  d.obs_dim = static_cast<int>(parse_int(field("obs_dim"), line_no));
  d.n_actions = static_cast<int>(parse_int(field("n_actions"), line_no));
  const auto count = parse_int(field("count"), line_no);
  d.meta.seed = static_cast<std::uint64_t>(std::stoull(field("seed")));
  if (fields.count("epsilon")) d.meta.epsilon = parse_double(fields["epsilon"], line_no);
  if (fields.count("source_score")) d.meta.source_score = parse_double(fields["source_score"], line_no);
  if (d.obs_dim <= 0 || d.n_actions <= 0 || count < 0) throw ParseError("invalid header dimensions", line_no);

  d.transitions.reserve(static_cast<std::size_t>(count));
  const std::size_t expected_tokens = static_cast<std::size_t>(2 * d.obs_dim + 3);
  std::vector<std::string_view> tokens;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    tokens.clear();
    std::string_view rest(line);
    while (!rest.empty()) {
      const auto start = rest.find_first_not_of(' ');
      if (start == std::string_view::npos) break;
      rest.remove_prefix(start);
      const auto end = rest.find(' ');
      tokens.push_back(rest.substr(0, end));
      rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
    }
    if (tokens.size() != expected_tokens) {
      throw ParseError("expected " + std::to_string(expected_tokens) + " fields, found " +
                           std::to_string(tokens.size()),
                       line_no);
    }
    Transition t;
    t.s.resize(static_cast<std::size_t>(d.obs_dim));
    t.s_next.resize(static_cast<std::size_t>(d.obs_dim));
    std::size_t k = 0;
    for (auto& v : t.s) v = parse_double(tokens[k++], line_no);
    t.a = static_cast<int>(parse_int(tokens[k++], line_no));
    t.r = parse_double(tokens[k++], line_no);
    for (auto& v : t.s_next) v = parse_double(tokens[k++], line_no);
    const auto done = tokens[k];
    if (done != "0" && done != "1") throw ParseError("done flag must be 0 or 1", line_no);
    t.done = done == "1";
    if (t.a < 0 || t.a >= d.n_actions) throw ParseError("action out of range", line_no);
    d.transitions.push_back(std::move(t));
  }
  if (static_cast<long long>(d.transitions.size()) != count) {
    throw ParseError("header declares " + std::to_string(count) + " transitions but the body has " +
                         std::to_string(d.transitions.size()),
                     line_no);
  }
  return d;
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open " + path.string() + " for writing");
  write_dataset(out, dataset);
  if (!out) throw Error("failed writing " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open dataset " + path.string());
  return read_dataset(in);
}

Dataset load_dataset(const std::filesystem::path& path, std::string_view expected_env) {
  Dataset d = load_dataset(path);
  require_env(d, expected_env);
  return d;
}

}  // namespace exid::data
