#include "latnet/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "latnet/errors.hpp"

namespace latnet {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

double parse_double(const std::string& tok, const std::string& where) {
  const std::string t = trim(tok);
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || t.empty()) {
    throw input_error(where + ": expected a number, got '" + tok + "'");
  }
  if (!std::isfinite(v)) throw input_error(where + ": non-finite value '" + tok + "'");
  return v;
}

long parse_long(const std::string& tok, const std::string& where) {
  const std::string t = trim(tok);
  long v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw input_error(where + ": expected an integer, got '" + tok + "'");
  }
  return v;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open file: " + path);
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

Dataset load_dataset(const std::string& nodes_path, const std::string& edges_path) {
  Dataset data;
  std::unordered_map<std::string, int> index;

  {
    std::ifstream in = open_or_throw(nodes_path);
    std::string line;
    if (!std::getline(in, line)) throw input_error(nodes_path + ": empty file");
    const auto header = split_csv(line);
    if (header.size() < 3 || header[0] != "id" || header[1] != "y") {
      throw input_error(nodes_path + ": header must be id,y,x1,...,xp");
    }
    const std::size_t p = header.size() - 2;
    for (std::size_t j = 0; j < p; ++j) {
      if (header[j + 2] != "x" + std::to_string(j + 1)) {
        throw input_error(nodes_path + ": covariate columns must be named x1..x" +
                          std::to_string(p));
      }
    }
    std::vector<double> xflat;
    long line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto tok = split_csv(line);
      const std::string where = nodes_path + ":" + std::to_string(line_no);
      if (tok.size() != p + 2) {
        throw input_error(where + ": expected " + std::to_string(p + 2) + " fields, got " +
                          std::to_string(tok.size()));
      }
      if (tok[0].empty()) throw input_error(where + ": empty id");
      if (!index.emplace(tok[0], static_cast<int>(data.ids.size())).second) {
        throw input_error(where + ": duplicate id '" + tok[0] + "'");
      }
      data.ids.push_back(tok[0]);
      const long yv = parse_long(tok[1], where);
      if (yv != 0 && yv != 1) throw input_error(where + ": y must be 0 or 1");
      data.y.push_back(static_cast<std::int8_t>(yv));
      for (std::size_t j = 0; j < p; ++j) xflat.push_back(parse_double(tok[j + 2], where));
    }
    const std::size_t n = data.ids.size();
    if (n == 0) throw input_error(nodes_path + ": no data rows");
    data.X = Matrix(n, p);
    data.X.data() = std::move(xflat);
  }

  {
    std::ifstream in = open_or_throw(edges_path);
    std::string line;
    std::vector<std::pair<int, int>> edges;
    long line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      std::string norm = t;
      std::replace(norm.begin(), norm.end(), ',', ' ');
      std::istringstream is(norm);
      std::string a, b, extra;
      const std::string where = edges_path + ":" + std::to_string(line_no);
      if (!(is >> a >> b)) throw input_error(where + ": expected two node labels");
      if (is >> extra) throw input_error(where + ": expected exactly two node labels");
      const auto ia = index.find(a);
      if (ia == index.end()) throw input_error(where + ": unknown node label '" + a + "'");
      const auto ib = index.find(b);
      if (ib == index.end()) throw input_error(where + ": unknown node label '" + b + "'");
      if (ia->second == ib->second) {
        throw input_error(where + ": self loop at node '" + a + "'");
      }
      edges.emplace_back(ia->second, ib->second);
    }
    data.graph = Graph::from_edge_list(edges, static_cast<int>(data.ids.size()));
  }

  data.validate();
  return data;
}

void save_dataset(const Dataset& data, const std::string& nodes_path,
                  const std::string& edges_path) {
  data.validate();
  const int n = data.n();
  const int p = data.p();
  {
    std::ofstream out(nodes_path);
    if (!out) throw input_error("cannot write file: " + nodes_path);
    out << "id,y";
    for (int j = 0; j < p; ++j) out << ",x" << (j + 1);
    out << "\n";
    for (int i = 0; i < n; ++i) {
      out << (data.ids.empty() ? std::to_string(i) : data.ids[i]) << ","
          << static_cast<int>(data.y[i]);
      for (int j = 0; j < p; ++j) out << "," << format_double(data.X(i, j));
      out << "\n";
    }
  }
  {
    std::ofstream out(edges_path);
    if (!out) throw input_error("cannot write file: " + edges_path);
    out << "# edge list: two node labels per line\n";
    for (int i = 0; i < n; ++i) {
      for (int j : data.graph.neighbors(i)) {
        if (j > i) {
          out << (data.ids.empty() ? std::to_string(i) : data.ids[i]) << " "
              << (data.ids.empty() ? std::to_string(j) : data.ids[j]) << "\n";
        }
      }
    }
  }
}

KvConfig KvConfig::parse_text(const std::string& text, const std::string& origin) {
  KvConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::size_t eq = t.find('=');
    const std::string where = origin + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw input_error(where + ": expected `key = value`");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw input_error(where + ": empty key");
    if (!cfg.values_.emplace(key, value).second) {
      throw input_error(where + ": duplicate key '" + key + "'");
    }
  }
  return cfg;
}

KvConfig KvConfig::parse_file(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

bool KvConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  return parse_double(it->second, origin_ + ": key '" + key + "'");
}

int KvConfig::get_int(const std::string& key, int fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  return static_cast<int>(parse_long(it->second, origin_ + ": key '" + key + "'"));
}

std::uint64_t KvConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string t = trim(it->second);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw input_error(origin_ + ": key '" + key + "': expected an unsigned integer");
  }
  return v;
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw input_error(origin_ + ": key '" + key + "': expected true/false");
}

std::vector<double> KvConfig::get_double_list(const std::string& key,
                                              const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  for (const auto& tok : split_csv(it->second)) {
    out.push_back(parse_double(tok, origin_ + ": key '" + key + "'"));
  }
  return out;
}

std::vector<int> KvConfig::get_int_list(const std::string& key,
                                        const std::vector<int>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<int> out;
  for (const auto& tok : split_csv(it->second)) {
    out.push_back(static_cast<int>(parse_long(tok, origin_ + ": key '" + key + "'")));
  }
  return out;
}

void KvConfig::restrict_keys(const std::vector<std::string>& allowed) const {
  for (const auto& [key, value] : values_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw input_error(origin_ + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace latnet
