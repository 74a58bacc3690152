#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace gapforge {

// Flat binary parameter blob: magic, tensor count, then per tensor
// (name, rows, cols, doubles). Little-endian, written deterministically.
void write_tensor_blob(const std::string& path,
                       const std::vector<std::pair<std::string, Eigen::MatrixXd>>& tensors);

std::map<std::string, Eigen::MatrixXd> read_tensor_blob(const std::string& path);

}  // namespace gapforge
