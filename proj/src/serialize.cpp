#include "semdup/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "semdup/error.hpp"

namespace semdup {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

nlohmann::ordered_json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

CsvTable::CsvTable(std::vector<std::string> header) : width_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ += ',';
    out_ += header[i];
  }
  out_ += '\n';
}

CsvTable& CsvTable::add(double v) {
  row_.push_back(format_double(v));
  return *this;
}

CsvTable& CsvTable::add(std::string s) {
  row_.push_back(std::move(s));
  return *this;
}

CsvTable& CsvTable::add_int(long long v) {
  row_.push_back(std::to_string(v));
  return *this;
}

void CsvTable::end_row() {
  if (row_.size() != width_) {
    throw FormatError("CSV row has " + std::to_string(row_.size()) + " fields, header has " +
                      std::to_string(width_));
  }
  for (std::size_t i = 0; i < row_.size(); ++i) {
    if (i) out_ += ',';
    out_ += row_[i];
  }
  out_ += '\n';
  row_.clear();
}

std::string CsvTable::str() const { return out_; }

void CsvTable::write(const std::filesystem::path& path) const { write_text(path, out_); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

nlohmann::ordered_json to_json(const nnstats::NNReport& r, bool per_query) {
  nlohmann::ordered_json j;
  j["pool_size"] = r.pool_size;
  j["query_count"] = r.query_count;
  j["dim"] = r.dim;
  j["index_kind"] = nnstats::to_string(r.index_kind);
  j["mean_nn_similarity"] = json_number(r.mean_nn_similarity);
  j["mean_gap"] = json_number(r.mean_gap);
  j["mean_angle"] = json_number(r.mean_angle);
  auto& tails = j["tail_fractions"] = nlohmann::ordered_json::array();
  for (const auto& t : r.tail_fractions) {
    tails.push_back({{"threshold", t.threshold}, {"fraction", t.fraction}});
  }
  if (r.index_kind == nnstats::IndexKind::Lsh) {
    j["fallback_count"] = r.fallback_queries.size();
    j["mean_candidates"] = json_number(r.mean_candidates);
  }
  if (per_query) {
    j["queries"] = r.queries;
    auto& sims = j["nn_similarity"] = nlohmann::ordered_json::array();
    for (double s : r.nn_similarity) sims.push_back(json_number(s));
    j["nn_index"] = r.nn_index;
  }
  return j;
}

nlohmann::ordered_json to_json(const nnstats::LadderResult& r) {
  nlohmann::ordered_json j;
  j["seed"] = r.seed;
  j["queries_cap"] = r.queries_cap;
  auto& entries = j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : r.entries) {
    auto item = to_json(e.report);
    item["n"] = e.n;
    entries.push_back(std::move(item));
  }
  auto& failures = j["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : r.failures) failures.push_back({{"n", f.n}, {"message", f.message}});
  if (r.powerlaw_fit) {
    j["powerlaw_fit"] = {{"intercept", json_number(r.powerlaw_fit->intercept)},
                         {"slope", json_number(r.powerlaw_fit->slope)},
                         {"window_first", r.fit_window.first},
                         {"window_last", r.fit_window.last}};
  } else {
    j["powerlaw_fit"] = nullptr;
  }
  j["deviation_factor"] = r.deviation_factor;
  if (r.breakdown_n) {
    j["breakdown_n"] = *r.breakdown_n;
  } else {
    j["breakdown_n"] = nullptr;
  }
  return j;
}

nlohmann::ordered_json to_json(const keff::KeffEstimate& e) {
  nlohmann::ordered_json j;
  j["q_hat"] = json_number(e.q_hat);
  j["k_eff_hat"] = json_number(e.k_eff_hat);
  j["m0"] = json_number(e.m0);
  j["m0_se"] = json_number(e.m0_se);
  j["m_plus"] = json_number(e.m_plus);
  j["n_meas"] = e.n_meas;
  j["mean_nn"] = json_number(e.mean_nn);
  j["q_raw"] = json_number(e.q_raw);
  j["flags"] = {{"saturated_low", e.saturated_low},
                {"saturated_high", e.saturated_high},
                {"negative_excess", e.negative_excess}};
  j["provenance"] = {{"seed", e.seed},
                     {"stream_count", e.stream_count},
                     {"reference_count", e.reference_count},
                     {"dim", e.dim},
                     {"index_kind", nnstats::to_string(e.index_kind)}};
  return j;
}

nlohmann::ordered_json to_json(const scaling::PlaneLawFit& f) {
  nlohmann::ordered_json j;
  j["a"] = json_number(f.a);
  j["beta"] = json_number(f.beta);
  j["gamma"] = json_number(f.gamma);
  j["method"] = f.method;
  j["n_points"] = f.n_points;
  j["excluded_nonpositive"] = f.excluded_nonpositive;
  j["mean_abs_rel_err"] = json_number(f.mean_abs_rel_err);
  j["median_abs_rel_err"] = json_number(f.median_abs_rel_err);
  j["log_rss"] = json_number(f.log_rss);
  return j;
}

nlohmann::ordered_json to_json(const scaling::RatioLawFit& f) {
  nlohmann::ordered_json j;
  j["lambda"] = json_number(f.lambda);
  j["eta"] = json_number(f.eta);
  j["n_points"] = f.n_points;
  j["excluded_nonpositive"] = f.excluded_nonpositive;
  j["mean_abs_rel_err"] = json_number(f.mean_abs_rel_err);
  j["median_abs_rel_err"] = json_number(f.median_abs_rel_err);
  j["log_rss"] = json_number(f.log_rss);
  return j;
}

nlohmann::ordered_json to_json(const nullmodel::NNTheoryResult& r) {
  nlohmann::ordered_json j;
  j["expected_nn_similarity"] = json_number(r.expected_nn_similarity);
  j["expected_angle"] = json_number(r.expected_angle);
  j["expected_gap"] = json_number(r.expected_gap);
  j["regime"] = std::string(nullmodel::to_string(r.regime));
  return j;
}

std::string ladder_csv(const nnstats::LadderResult& r) {
  std::vector<std::string> header = {"n", "query_count", "index", "mean_nn", "mean_gap",
                                     "mean_angle"};
  if (!r.entries.empty()) {
    for (const auto& t : r.entries.front().report.tail_fractions) {
      // Column names use the shortest round-trip form (0.6, not 0.59999999999999998).
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof buf, t.threshold);
      header.push_back("tail_ge_" + std::string(buf, res.ptr));
    }
  }
  CsvTable table(header);
  for (const auto& e : r.entries) {
    table.add_int(static_cast<long long>(e.n))
        .add_int(static_cast<long long>(e.report.query_count))
        .add(nnstats::to_string(e.report.index_kind))
        .add(e.report.mean_nn_similarity)
        .add(e.report.mean_gap)
        .add(e.report.mean_angle);
    for (const auto& t : e.report.tail_fractions) table.add(t.fraction);
    table.end_row();
  }
  return table.str();
}

}  // namespace semdup
