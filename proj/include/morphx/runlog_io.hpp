#pragma once

// Run-log CSV files. One file per run, schema:
//   used_steps,event,genome_id,objective,complexity,payload
// Doubles use shortest round-trip formatting and payloads are comma-free, so
// serialize/parse is an exact inverse pair and identical runs produce
// byte-identical files.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "morphx/engine.hpp"
#include "morphx/text.hpp"

namespace morphx {

inline constexpr std::string_view kRunLogHeader =
    "used_steps,event,genome_id,objective,complexity,payload";

inline std::string runlog_to_csv(const RunLog& log) {
  std::string out{kRunLogHeader};
  out += '\n';
  for (const auto& row : log.rows) {
    out += std::to_string(row.used_steps);
    out += ',';
    out += event_name(row.event);
    out += ',';
    out += row.genome_id;
    out += ',';
    out += fmt_double(row.objective);
    out += ',';
    out += std::to_string(row.complexity);
    out += ',';
    out += row.payload;
    out += '\n';
  }
  return out;
}

// Parses rows only; schedule/master_seed/max_steps metadata live in the file
// name and experiment config, and are left to the caller.
inline RunLog runlog_from_csv(std::string_view text) {
  RunLog log;
  const auto lines = split(text, '\n');
  if (lines.empty() || trim(lines[0]) != kRunLogHeader)
    throw std::invalid_argument("run log: bad or missing header");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 6)
      throw std::invalid_argument("run log line " + std::to_string(i + 1) +
                                  ": expected 6 columns");
    RunLogRow row;
    row.used_steps = parse_u64(fields[0]);
    row.event = event_from_name(fields[1]);
    row.genome_id = std::string(fields[2]);
    row.objective = parse_double(fields[3]);
    row.complexity = static_cast<int>(parse_u64(fields[4]));
    row.payload = std::string(fields[5]);
    if (!log.rows.empty() && row.used_steps < log.rows.back().used_steps)
      throw std::invalid_argument("run log line " + std::to_string(i + 1) +
                                  ": used_steps decreased");
    log.rows.push_back(std::move(row));
  }
  return log;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return content;
}

// Write-to-temp-then-rename, so readers never observe a partial file and an
// interrupted run leaves either the old content or the new one.
inline void write_file_atomic(const std::filesystem::path& path,
                              std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void save_runlog(const std::filesystem::path& path, const RunLog& log) {
  write_file_atomic(path, runlog_to_csv(log));
}

inline RunLog load_runlog(const std::filesystem::path& path) {
  RunLog log = runlog_from_csv(read_file(path));
  return log;
}

}  // namespace morphx
