#include "phylnet/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace phylnet {

std::string format_full(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) {
    // trim surrounding whitespace
    size_t b = field.find_first_not_of(" \t\r");
    size_t e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  return out;
}

bool is_binary_token(const std::string& t) { return t == "0" || t == "1"; }

}  // namespace

Eigen::MatrixXi read_adjacency_csv(const std::string& path, std::vector<std::string>* labels_out) {
  const std::string content = read_text_file(path);
  std::istringstream ss(content);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(ss, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(split(line, ','));
  }
  if (rows.empty()) throw std::runtime_error(path + ": empty file");

  std::vector<std::string> labels;
  size_t first_data = 0;
  bool header = false;
  for (const auto& t : rows[0])
    if (!is_binary_token(t)) header = true;
  if (header) {
    labels = rows[0];
    first_data = 1;
  }
  const size_t V = rows.size() - first_data;
  if (V < 2) throw std::runtime_error(path + ": fewer than 2 rows");
  if (header && labels.size() != V)
    throw std::runtime_error(path + ": header has " + std::to_string(labels.size()) +
                             " labels for " + std::to_string(V) + " rows");
  Eigen::MatrixXi y(V, V);
  for (size_t r = 0; r < V; ++r) {
    const auto& row = rows[first_data + r];
    if (row.size() != V)
      throw std::runtime_error(path + ": row " + std::to_string(r + 1) + " has " +
                               std::to_string(row.size()) + " entries, expected " +
                               std::to_string(V));
    for (size_t c = 0; c < V; ++c) {
      if (!is_binary_token(row[c]))
        throw std::runtime_error(path + ": non-binary entry '" + row[c] + "' at (" +
                                 std::to_string(r + 1) + "," + std::to_string(c + 1) + ")");
      y(r, c) = row[c] == "1" ? 1 : 0;
    }
  }
  if (labels_out) *labels_out = labels;
  return y;
}

std::string adjacency_to_csv(const std::vector<std::string>& labels, const Eigen::MatrixXi& y) {
  std::string out;
  if (!labels.empty()) {
    for (size_t i = 0; i < labels.size(); ++i) {
      if (i) out += ',';
      out += labels[i];
    }
    out += '\n';
  }
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      if (c) out += ',';
      out += y(r, c) ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

NetworkData read_adjacency_csvs(const std::vector<std::string>& paths) {
  if (paths.empty()) throw std::runtime_error("no adjacency files given");
  NetworkData data;
  for (const auto& path : paths) {
    std::vector<std::string> labels;
    Eigen::MatrixXi y = read_adjacency_csv(path, &labels);
    if (data.adjacency.empty()) {
      if (labels.empty())
        for (int v = 0; v < y.rows(); ++v) data.labels.push_back("v" + std::to_string(v + 1));
      else
        data.labels = labels;
    } else {
      if (y.rows() != data.num_nodes())
        throw std::runtime_error(path + ": dimension mismatch across networks (" +
                                 std::to_string(y.rows()) + " vs " +
                                 std::to_string(data.num_nodes()) + " nodes)");
      if (!labels.empty() && labels != data.labels)
        throw std::runtime_error(path + ": node labels differ from earlier networks");
    }
    data.adjacency.push_back(std::move(y));
  }
  require_valid(data);
  return data;
}

std::string sample_log_to_string(const std::vector<PosteriorSample>& samples) {
  std::string out = "# phylnet sample log v1\n# chain\titer\ta\tsigma2\tb\tnewick";
  const bool with_z = !samples.empty() && !samples.front().z.empty();
  if (with_z) out += "\tz";
  out += '\n';
  for (const auto& s : samples) {
    out += std::to_string(s.chain) + '\t' + std::to_string(s.iter) + '\t' + format_full(s.a) +
           '\t' + format_full(s.sigma2) + '\t' + format_full(s.b) + '\t' + s.newick;
    if (with_z) {
      out += '\t';
      for (size_t i = 0; i < s.z.size(); ++i) {
        if (i) out += ',';
        out += format_full(s.z[i]);
      }
    }
    out += '\n';
  }
  return out;
}

std::vector<PosteriorSample> parse_sample_log(const std::string& content,
                                              const std::string& origin) {
  std::vector<PosteriorSample> samples;
  std::istringstream ss(content);
  std::string line;
  size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() < 6)
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": expected at least 6 tab-separated fields");
    PosteriorSample s;
    try {
      s.chain = std::stoi(fields[0]);
      s.iter = std::stoll(fields[1]);
      s.a = std::stod(fields[2]);
      s.sigma2 = std::stod(fields[3]);
      s.b = std::stod(fields[4]);
    } catch (const std::exception&) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": malformed numeric field");
    }
    s.newick = fields[5];
    if (fields.size() > 6 && !fields[6].empty()) {
      for (const auto& t : split(fields[6], ',')) s.z.push_back(std::stod(t));
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<PosteriorSample> read_sample_log(const std::string& path) {
  return parse_sample_log(read_text_file(path), path);
}

}  // namespace phylnet
