#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "semdup/keff.hpp"
#include "semdup/nnstats.hpp"
#include "semdup/nullmodel.hpp"
#include "semdup/scaling.hpp"

namespace semdup {

// 17 significant digits, '.' separator; "inf", "-inf", "nan" for non-finite.
std::string format_double(double v);

// A JSON number, or the strings "inf" / "-inf" / "nan".
nlohmann::ordered_json json_number(double v);

// Minimal CSV builder: fields are written verbatim, numbers via format_double.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& add(double v);
  CsvTable& add(std::string s);
  CsvTable& add_int(long long v);
  void end_row();

  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::size_t width_;
  std::vector<std::string> row_;
  std::string out_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);

nlohmann::ordered_json to_json(const nnstats::NNReport& r, bool per_query = false);
nlohmann::ordered_json to_json(const nnstats::LadderResult& r);
nlohmann::ordered_json to_json(const keff::KeffEstimate& e);
nlohmann::ordered_json to_json(const scaling::PlaneLawFit& f);
nlohmann::ordered_json to_json(const scaling::RatioLawFit& f);
nlohmann::ordered_json to_json(const nullmodel::NNTheoryResult& r);

// One row per rung: n, query_count, index, mean_nn, mean_gap, mean_angle,
// then tail_ge_<T> per threshold.
std::string ladder_csv(const nnstats::LadderResult& r);

}  // namespace semdup
