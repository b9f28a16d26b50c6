#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>

#include "cli.hpp"
#include "semdup/parallel.hpp"
#include "semdup/serialize.hpp"

namespace semdup::cli {
namespace {

LogLevel g_level = LogLevel::Info;
std::string g_argv;

}  // namespace

void set_invocation(const std::string& argv) { g_argv = argv; }

void add_common_options(CLI::App* sub, Common& common) {
  sub->add_option("--config", "Flat 'key = value' file; flags given on the command line win");
  sub->add_option("--seed", common.seed, "Root seed for every random stream")
      ->capture_default_str();
  sub->add_option("-o,--output-dir", common.output_dir, "Directory for outputs")
      ->capture_default_str();
  sub->add_option("--threads", common.threads,
                  "Worker threads (0: SEMDUP_THREADS or hardware concurrency)")
      ->capture_default_str();
  sub->add_option("--log-level", common.log_level, "error, warn, info or debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}))
      ->capture_default_str();
}

unsigned resolve_threads(unsigned flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("SEMDUP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    throw UsageError(std::string("SEMDUP_THREADS must be a positive integer, got '") + env + "'");
  }
  return default_threads();
}

std::filesystem::path prepare_output(const CLI::App& sub, const Common& common) {
  const std::filesystem::path dir(common.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory " + dir.string() + ": " + ec.message());
  write_text(dir / "config.resolved", "# " + sub.get_name() + "\n" + sub.config_to_str(true, false));

  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
  nlohmann::ordered_json meta;
  meta["command"] = sub.get_name();
  meta["timestamp"] = stamp;
  meta["invocation"] = g_argv;
  write_json(dir / "run_metadata.json", meta);
  return dir;
}

EmbeddingFormat resolve_format(const std::string& flag, const std::filesystem::path& path) {
  if (flag == "csv") return EmbeddingFormat::Csv;
  if (flag == "binary") return EmbeddingFormat::Binary;
  return path.extension() == ".csv" ? EmbeddingFormat::Csv : EmbeddingFormat::Binary;
}

void add_lsh_options(CLI::App* sub, LshFlags& flags) {
  sub->add_option("--lsh-tables", flags.tables, "LSH hash tables")->capture_default_str();
  sub->add_option("--lsh-planes", flags.planes, "Hyperplanes per LSH table (<= 64)")
      ->capture_default_str();
  sub->add_option("--lsh-radius", flags.radius, "Multi-probe Hamming radius")
      ->capture_default_str();
}

nnstats::LshParams to_params(const LshFlags& flags) {
  nnstats::LshParams p;
  p.tables = flags.tables;
  p.hyperplanes_per_table = flags.planes;
  p.probe_radius = flags.radius;
  return p;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string unquote(std::string v) {
  v = trim(v);
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    v = v.substr(1, v.size() - 2);
  }
  if (v.size() >= 2 && v.front() == '[' && v.back() == ']') {
    std::string flat;
    for (char c : v.substr(1, v.size() - 2)) {
      if (c != ' ' && c != '"') flat += c;
    }
    v = flat;
  }
  return v;
}

bool mentions(const std::vector<std::string>& args, const CLI::Option& opt) {
  for (const auto& a : args) {
    for (const auto& l : opt.get_lnames()) {
      if (a == "--" + l || a.rfind("--" + l + "=", 0) == 0) return true;
    }
    for (const auto& s : opt.get_snames()) {
      if (a.rfind("-" + s, 0) == 0 && a.rfind("--", 0) != 0) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<std::string> expand_config(const CLI::App& app, std::vector<std::string> args) {
  if (args.size() < 2) return args;
  const CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args[1]);
  } catch (const CLI::OptionNotFound&) {
    return args;
  }
  std::string file;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) file = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) file = args[i].substr(9);
  }
  if (file.empty()) return args;
  std::ifstream in(file);
  if (!in) throw UsageError("cannot read config file " + file);

  std::vector<std::string> injected;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(file + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(line.substr(eq + 1));
    if (key == "config") continue;
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt) throw UsageError(file + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (value.empty() || mentions(args, *opt)) continue;
    injected.push_back("--" + key);
    injected.push_back(value);
  }
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

void set_log_level(const std::string& name) {
  if (name == "error") g_level = LogLevel::Error;
  else if (name == "warn") g_level = LogLevel::Warn;
  else if (name == "debug") g_level = LogLevel::Debug;
  else g_level = LogLevel::Info;
}

void log(LogLevel level, const std::string& message) {
  if (level > g_level) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace semdup::cli
