#include "exid/train/config.hpp"

#include <fstream>
#include <sstream>

#include "exid/common/csv.hpp"
#include "exid/common/error.hpp"
#include "exid/env/environment.hpp"

namespace exid::train {

TrainConfig TrainConfig::defaults_for(const std::string& env_id, data::DatasetKind kind) {
  env_spec(env_id);  // throws LookupError for unknown ids
  TrainConfig c;
  const bool expert = kind == data::DatasetKind::expert;
  if (env_id == "mountaincar") {
    c.teacher_lr = 1e-5;
    c.total_steps = expert ? 42000 : 36000;
  } else if (env_id == "cartpole") {
    c.teacher_lr = 1e-2;
    c.total_steps = expert ? 30000 : 17000;
  } else if (env_id == "minigrid-dynobs-6x6") {
    c.lambda = 0.1;
    c.teacher_lr = 1e-4;
    c.total_steps = 5000;
  } else if (env_id == "minigrid-lavagap-7x7") {
    c.lambda = 0.1;
    c.teacher_lr = 1e-4;
    c.total_steps = 10000;
  }
  return c;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw UsageError("invalid training config: " + what); };
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda must lie in [0, 1]");
  if (warm_start_k < 0) fail("warm_start_k must be non-negative");
  if (!(alpha >= 0.0)) fail("alpha must be non-negative");
  if (!(tau > 0.0 && tau <= 1.0)) fail("tau must lie in (0, 1]");
  if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must lie in (0, 1]");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(teacher_lr > 0.0)) fail("teacher_lr must be positive");
  if (batch_size <= 0) fail("batch_size must be positive");
  if (total_steps <= 0) fail("total_steps must be positive");
  if (mc_passes_T <= 0) fail("mc_passes_T must be positive");
  if (gate_check_every <= 0) fail("gate_check_every must be positive");
  if (steps_per_episode <= 0) fail("steps_per_episode must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (hidden.empty()) fail("hidden must list at least one layer");
  for (int h : hidden) {
    if (h <= 0) fail("hidden layer sizes must be positive");
  }
  if (!(max_grad_norm > 0.0)) fail("max_grad_norm must be positive");
  if (eval_every < 0) fail("eval_every must be non-negative");
  if (eval_episodes <= 0) fail("eval_episodes must be positive");
}

namespace {

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("expected a boolean, got '" + std::string(v) + "'");
}

std::vector<int> parse_sizes(std::string_view v) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const auto piece = v.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    out.push_back(static_cast<int>(parse_int(piece)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void TrainConfig::set(std::string_view key, std::string_view value) {
  try {
    auto real = [&] { return parse_double(value); };
    auto integer = [&] { return parse_int(value); };
    if (key == "lambda") lambda = real();
    else if (key == "warm_start_k") warm_start_k = static_cast<int>(integer());
    else if (key == "alpha") alpha = real();
    else if (key == "tau") tau = real();
    else if (key == "gamma") gamma = real();
    else if (key == "lr") lr = real();
    else if (key == "teacher_lr") teacher_lr = real();
    else if (key == "batch_size") batch_size = static_cast<int>(integer());
    else if (key == "total_steps") total_steps = static_cast<long>(integer());
    else if (key == "mc_passes_T") mc_passes_T = static_cast<int>(integer());
    else if (key == "gate_check_every") gate_check_every = static_cast<int>(integer());
    else if (key == "steps_per_episode") steps_per_episode = static_cast<int>(integer());
    else if (key == "dropout") dropout = real();
    else if (key == "hidden") hidden = parse_sizes(value);
    else if (key == "max_grad_norm") max_grad_norm = real();
    else if (key == "update_teacher") update_teacher = parse_bool(value);
    else if (key == "regularize_after_warmup") regularize_after_warmup = parse_bool(value);
    else if (key == "eval_every") eval_every = static_cast<long>(integer());
    else if (key == "eval_episodes") eval_episodes = static_cast<int>(integer());
    else throw UsageError("unknown training config key '" + std::string(key) + "'");
  } catch (const ParseError& e) {
    throw UsageError("bad value for '" + std::string(key) + "': " + e.what());
  }
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out << "lambda = " << format_double(lambda) << "\n"
      << "warm_start_k = " << warm_start_k << "\n"
      << "alpha = " << format_double(alpha) << "\n"
      << "tau = " << format_double(tau) << "\n"
      << "gamma = " << format_double(gamma) << "\n"
      << "lr = " << format_double(lr) << "\n"
      << "teacher_lr = " << format_double(teacher_lr) << "\n"
      << "batch_size = " << batch_size << "\n"
      << "total_steps = " << total_steps << "\n"
      << "mc_passes_T = " << mc_passes_T << "\n"
      << "gate_check_every = " << gate_check_every << "\n"
      << "steps_per_episode = " << steps_per_episode << "\n"
      << "dropout = " << format_double(dropout) << "\n"
      << "hidden = ";
  for (std::size_t i = 0; i < hidden.size(); ++i) out << (i ? "," : "") << hidden[i];
  out << "\n"
      << "max_grad_norm = " << format_double(max_grad_norm) << "\n"
      << "update_teacher = " << (update_teacher ? "true" : "false") << "\n"
      << "regularize_after_warmup = " << (regularize_after_warmup ? "true" : "false") << "\n"
      << "eval_every = " << eval_every << "\n"
      << "eval_episodes = " << eval_episodes << "\n";
  return out.str();
}

TrainConfig parse_train_config(std::string_view text, TrainConfig base) {
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    try {
      base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const UsageError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return base;
}

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_train_config(buf.str(), std::move(base));
}

}  // namespace exid::train
