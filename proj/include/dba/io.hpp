#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dba/core.hpp"
#include "dba/error.hpp"
#include "dba/model.hpp"
#include "dba/oracle.hpp"
#include "dba/synthgen.hpp"

namespace dba {

using json = nlohmann::json;

/// 17 significant digits: enough to reconstruct any double bit-exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Err::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Err::IoError, "cannot write " + path.string());
  out << content;
  require(out.good(), Err::IoError, "write failed for " + path.string());
}

inline json parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  require(!j.is_discarded(), Err::BadConfig, "invalid JSON in " + path.string());
  return j;
}

/// FNV-1a over a canonical JSON dump; used as the spec content digest.
inline std::string content_digest(const json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Dataset files: CSV + JSON metadata sidecar

inline std::filesystem::path meta_path_for(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

inline void write_dataset(const Dataset& ds, const std::filesystem::path& csv_path) {
  ds.validate();
  std::ostringstream out;
  for (int j = 0; j < ds.d; ++j) out << 'x' << j << ',';
  out << "y,s,m\n";
  for (const Sample& smp : ds.samples) {
    for (int j = 0; j < ds.d; ++j) out << format_double(smp.x[j]) << ',';
    out << smp.y << ',' << smp.s << ',' << smp.m << '\n';
  }
  write_file(csv_path, out.str());

  json meta;
  meta["L"] = ds.L;
  meta["d"] = ds.d;
  meta["role"] = role_name(ds.role);
  meta["seed"] = ds.seed;
  meta["n"] = ds.size();
  meta["spec_digest"] = ds.spec_digest;
  write_file(meta_path_for(csv_path), meta.dump(2) + "\n");
}

inline Dataset read_dataset(const std::filesystem::path& csv_path) {
  const json meta = parse_json_file(meta_path_for(csv_path));
  Dataset ds;
  ds.L = meta.at("L").get<int>();
  ds.d = meta.at("d").get<int>();
  ds.role = role_from_name(meta.at("role").get<std::string>());
  ds.seed = meta.at("seed").get<std::uint64_t>();
  ds.spec_digest = meta.value("spec_digest", std::string());

  std::ifstream in(csv_path);
  require(in.good(), Err::IoError, "cannot open " + csv_path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), Err::IoError,
          "empty dataset file " + csv_path.string());

  const std::size_t n = meta.at("n").get<std::size_t>();
  ds.samples.reserve(n);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Sample smp;
    smp.x.resize(ds.d);
    const char* ptr = line.c_str();
    char* end = nullptr;
    for (int j = 0; j < ds.d; ++j) {
      smp.x[j] = std::strtod(ptr, &end);
      require(end != ptr && *end == ',', Err::IoError, "malformed row in " + csv_path.string());
      ptr = end + 1;
    }
    smp.y = static_cast<int>(std::strtol(ptr, &end, 10));
    require(*end == ',', Err::IoError, "malformed row in " + csv_path.string());
    ptr = end + 1;
    smp.s = static_cast<int>(std::strtol(ptr, &end, 10));
    require(*end == ',', Err::IoError, "malformed row in " + csv_path.string());
    ptr = end + 1;
    smp.m = static_cast<int>(std::strtol(ptr, &end, 10));
    ds.samples.push_back(std::move(smp));
  }
  require(ds.size() == n, Err::IoError,
          "row count does not match metadata in " + csv_path.string());
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------------------
// Single-column CSVs for weights and posteriors

inline void write_column_csv(const std::filesystem::path& path, const std::string& header,
                             std::span<const double> values) {
  std::ostringstream out;
  out << header << '\n';
  for (double v : values) out << format_double(v) << '\n';
  write_file(path, out.str());
}

inline std::vector<double> read_column_csv(const std::filesystem::path& path,
                                           const std::string& expected_header) {
  std::ifstream in(path);
  require(in.good(), Err::IoError, "cannot open " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == expected_header, Err::IoError,
          "expected header '" + expected_header + "' in " + path.string());
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    values.push_back(std::strtod(line.c_str(), nullptr));
  }
  return values;
}

// ---------------------------------------------------------------------------
// Model files

inline void write_model(const SoftmaxModel& m, const std::filesystem::path& path) {
  json j;
  j["L"] = m.L;
  j["d"] = m.d;
  j["hidden"] = m.hidden;
  if (m.hidden > 0) {
    j["w1"] = m.w1;
    j["w2"] = m.w2;
  } else {
    j["w"] = m.w;
  }
  write_file(path, j.dump() + "\n");
}

inline SoftmaxModel read_model(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  SoftmaxModel m;
  m.L = j.at("L").get<int>();
  m.d = j.at("d").get<int>();
  m.hidden = j.at("hidden").get<int>();
  if (m.hidden > 0) {
    m.w1 = j.at("w1").get<std::vector<double>>();
    m.w2 = j.at("w2").get<std::vector<double>>();
    require(m.w1.size() == static_cast<std::size_t>(m.hidden) * (m.d + 1) &&
                m.w2.size() == static_cast<std::size_t>(m.L) * (m.hidden + 1),
            Err::IoError, "model parameter shapes inconsistent in " + path.string());
  } else {
    m.w = j.at("w").get<std::vector<double>>();
    require(m.w.size() == static_cast<std::size_t>(m.L) * (m.d + 1), Err::IoError,
            "model parameter shape inconsistent in " + path.string());
  }
  return m;
}

// ---------------------------------------------------------------------------
// Generator spec files

inline DiscreteGenSpec discrete_spec_from_json(const json& j) {
  DiscreteGenSpec spec;
  spec.L = j.at("L").get<int>();
  spec.K = j.at("K").get<int>();
  spec.p_m0 = j.at("p_m0").get<double>();
  spec.p_y = j.at("p_y").get<std::vector<double>>();
  spec.seed = j.value("seed", std::uint64_t{0});
  const auto& table = j.at("cond_table");
  require(table.is_array() && static_cast<int>(table.size()) == spec.L, Err::BadConfig,
          "cond_table must have one row per class");
  spec.cond.resize(static_cast<std::size_t>(spec.K) * spec.L * spec.L);
  for (int y = 0; y < spec.L; ++y) {
    require(static_cast<int>(table[y].size()) == spec.L, Err::BadConfig,
            "cond_table rows must have one column per attribute");
    for (int s = 0; s < spec.L; ++s) {
      const auto col = table[y][s].get<std::vector<double>>();
      require(static_cast<int>(col.size()) == spec.K, Err::BadConfig,
              "cond_table columns must have K entries");
      for (int k = 0; k < spec.K; ++k) spec.cond_at(k, y, s) = col[k];
    }
  }
  spec.validate();
  return spec;
}

inline json discrete_spec_to_json(const DiscreteGenSpec& spec) {
  json j;
  j["family"] = "discrete";
  j["L"] = spec.L;
  j["K"] = spec.K;
  j["p_m0"] = spec.p_m0;
  j["p_y"] = spec.p_y;
  j["seed"] = spec.seed;
  json table = json::array();
  for (int y = 0; y < spec.L; ++y) {
    json row = json::array();
    for (int s = 0; s < spec.L; ++s) {
      std::vector<double> col(spec.K);
      for (int k = 0; k < spec.K; ++k) col[k] = spec.cond_at(k, y, s);
      row.push_back(col);
    }
    table.push_back(row);
  }
  j["cond_table"] = table;
  return j;
}

inline GaussianGenSpec gaussian_spec_from_json(const json& j) {
  GaussianGenSpec spec;
  spec.L = j.at("L").get<int>();
  spec.d_core = j.at("d_core").get<int>();
  spec.d_spur = j.at("d_spur").get<int>();
  spec.core_means = j.at("core_means").get<std::vector<std::vector<double>>>();
  spec.spur_means = j.at("spur_means").get<std::vector<std::vector<double>>>();
  spec.sigma_core = j.at("sigma_core").get<double>();
  spec.sigma_spur = j.at("sigma_spur").get<double>();
  spec.p_m0 = j.at("p_m0").get<double>();
  spec.p_y = j.at("p_y").get<std::vector<double>>();
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.validate();
  return spec;
}

inline json gaussian_spec_to_json(const GaussianGenSpec& spec) {
  json j;
  j["family"] = "gaussian";
  j["L"] = spec.L;
  j["d_core"] = spec.d_core;
  j["d_spur"] = spec.d_spur;
  j["core_means"] = spec.core_means;
  j["spur_means"] = spec.spur_means;
  j["sigma_core"] = spec.sigma_core;
  j["sigma_spur"] = spec.sigma_spur;
  j["p_m0"] = spec.p_m0;
  j["p_y"] = spec.p_y;
  j["seed"] = spec.seed;
  return j;
}

inline TwoGroupSpec two_group_spec_from_json(const json& j) {
  TwoGroupSpec spec;
  spec.K = j.at("K").get<int>();
  spec.L = j.at("L").get<int>();
  spec.p_m0 = j.at("p_m0").get<double>();
  spec.p_x = j.at("p_x").get<std::vector<double>>();
  const auto c0 = j.at("cond0").get<std::vector<std::vector<double>>>();
  const auto c1 = j.at("cond1").get<std::vector<std::vector<double>>>();
  require(static_cast<int>(c0.size()) == spec.K && static_cast<int>(c1.size()) == spec.K,
          Err::BadConfig, "cond0/cond1 must have one row per feature value");
  spec.cond0.resize(static_cast<std::size_t>(spec.K) * spec.L);
  spec.cond1.resize(static_cast<std::size_t>(spec.K) * spec.L);
  for (int k = 0; k < spec.K; ++k) {
    require(static_cast<int>(c0[k].size()) == spec.L && static_cast<int>(c1[k].size()) == spec.L,
            Err::BadConfig, "cond0/cond1 rows must have L entries");
    for (int y = 0; y < spec.L; ++y) {
      spec.cond0[static_cast<std::size_t>(k) * spec.L + y] = c0[k][y];
      spec.cond1[static_cast<std::size_t>(k) * spec.L + y] = c1[k][y];
    }
  }
  spec.validate();
  return spec;
}

/// Dispatch on the "family" field: "discrete", "gaussian", or "two-group".
struct GenSpecFile {
  std::string family;
  DiscreteGenSpec discrete;
  GaussianGenSpec gaussian;
  TwoGroupSpec two_group;
  std::string digest;
};

inline GenSpecFile load_spec_file(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  GenSpecFile out;
  out.family = j.value("family", "discrete");
  out.digest = content_digest(j);
  if (out.family == "discrete") {
    out.discrete = discrete_spec_from_json(j);
  } else if (out.family == "gaussian") {
    out.gaussian = gaussian_spec_from_json(j);
  } else if (out.family == "two-group") {
    out.two_group = two_group_spec_from_json(j);
  } else {
    fail(Err::BadConfig, "unknown spec family '" + out.family + "' in " + path.string());
  }
  return out;
}

}  // namespace dba
