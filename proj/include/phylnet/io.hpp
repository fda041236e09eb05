#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phylnet/model.hpp"
#include "phylnet/sampler.hpp"

namespace phylnet {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Adjacency CSV: square 0/1 matrix, comma separated, optional first header
// row of node labels. labels_out is left empty when no header is present.
Eigen::MatrixXi read_adjacency_csv(const std::string& path, std::vector<std::string>* labels_out);
std::string adjacency_to_csv(const std::vector<std::string>& labels, const Eigen::MatrixXi& y);

// Reads several adjacency CSVs into one NetworkData; labels must agree across
// files, files without headers get v1..vV.
NetworkData read_adjacency_csvs(const std::vector<std::string>& paths);

// Sample log: tab-separated, one retained draw per line, '#' header lines.
// Fields: chain iter a sigma2 b newick [z], scalars in %.17g, z flattened as
// comma-separated values indexed (m*K + k)*V + v.
std::string sample_log_to_string(const std::vector<PosteriorSample>& samples);
std::vector<PosteriorSample> parse_sample_log(const std::string& content, const std::string& origin);
std::vector<PosteriorSample> read_sample_log(const std::string& path);

std::string format_full(double x);  // %.17g, round-trip exact

}  // namespace phylnet
