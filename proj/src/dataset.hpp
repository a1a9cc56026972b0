#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace shapefit {

/// Regression data: n rows of d inputs and one output.
struct Dataset {
   std::vector<std::string> columns;  // d input names followed by the output name
   Eigen::MatrixXd inputs;            // n x d
   Eigen::VectorXd targets;           // n

   std::size_t size() const { return static_cast<std::size_t>(targets.size()); }
   int input_dim() const { return static_cast<int>(inputs.cols()); }
   Dataset subset(std::span<const std::size_t> rows) const;
   std::vector<double> point(std::size_t row) const;
};

struct InputRange {
   double min = 0.0;
   double max = 1.0;
   friend bool operator==(const InputRange&, const InputRange&) = default;
};

/// Header row, then d input columns and one output column per line.
/// Throws parse_error naming the offending line and column.
Dataset parse_csv(std::string_view text);
Dataset load_csv(const std::string& path);
std::string to_csv(const Dataset& data);

/// Per-column min/max; a constant column gets a unit-width range centred on its value.
std::vector<InputRange> observed_ranges(const Dataset& data);

double to_unit(double raw, const InputRange& r);
double from_unit(double unit, const InputRange& r);

/// Affine map of every input column onto [0, 1].
Dataset scale_to_unit(const Dataset& data, std::span<const InputRange> ranges);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

} // namespace shapefit
