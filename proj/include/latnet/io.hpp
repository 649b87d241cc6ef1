#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "latnet/model.hpp"

namespace latnet {

// Node table: CSV with header `id,y,x1,...,xp`; y must be 0 or 1, covariates
// finite decimals, ids unique. Edge list: two node labels per line, comma or
// whitespace separated, lines starting with '#' ignored; labels must appear
// in the node table. Node order and label-to-index mapping follow the node
// file (first seen wins).
Dataset load_dataset(const std::string& nodes_path, const std::string& edges_path);

// Inverse of load_dataset: numeric values are written in shortest
// round-tripping decimal form, so save -> load reproduces X bit for bit.
void save_dataset(const Dataset& data, const std::string& nodes_path,
                  const std::string& edges_path);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// Flat `key = value` configuration, '#' starts a comment, keys unique.
class KvConfig {
 public:
  static KvConfig parse_file(const std::string& path);
  static KvConfig parse_text(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

  // Rejects keys outside `allowed` (typo guard).
  void restrict_keys(const std::vector<std::string>& allowed) const;
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
};

}  // namespace latnet
