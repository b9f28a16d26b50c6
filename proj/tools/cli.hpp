#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "semdup/embedding.hpp"
#include "semdup/nnstats.hpp"

namespace semdup::cli {

// Invalid flag combinations detected after parsing; mapped to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LogLevel { Error, Warn, Info, Debug };

struct Common {
  std::uint64_t seed = 0;
  std::string output_dir = "semdup_out";
  unsigned threads = 0;
  std::string log_level = "info";
};

void add_common_options(CLI::App* sub, Common& common);

// --threads, else SEMDUP_THREADS, else hardware concurrency.
unsigned resolve_threads(unsigned flag);

// Reads the file named by --config (flat "key = value"; '#' comments) and
// inserts its entries as flags right after the subcommand, skipping keys
// whose option already appears on the command line.
std::vector<std::string> expand_config(const CLI::App& app, std::vector<std::string> args);

// Creates the output directory, writes config.resolved (every option of the
// subcommand, defaults included) and run_metadata.json (timestamp, argv).
std::filesystem::path prepare_output(const CLI::App& sub, const Common& common);

// "auto" picks csv for a .csv extension and binary otherwise.
EmbeddingFormat resolve_format(const std::string& flag, const std::filesystem::path& path);

struct LshFlags {
  std::size_t tables = nnstats::LshParams{}.tables;
  std::size_t planes = nnstats::LshParams{}.hyperplanes_per_table;
  std::size_t radius = nnstats::LshParams{}.probe_radius;
};

void add_lsh_options(CLI::App* sub, LshFlags& flags);
nnstats::LshParams to_params(const LshFlags& flags);

void set_invocation(const std::string& argv);
void set_log_level(const std::string& name);
void log(LogLevel level, const std::string& message);

using Runner = std::function<void()>;

void register_null(CLI::App& app, Runner& run);
void register_nnstats(CLI::App& app, Runner& run);
void register_keff(CLI::App& app, Runner& run);
void register_fit(CLI::App& app, Runner& run);
void register_simulate(CLI::App& app, Runner& run);
void register_gen(CLI::App& app, Runner& run);

}  // namespace semdup::cli
