#include "dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace shapefit {

namespace {

std::string_view trim(std::string_view s)
{
   while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
      s.remove_prefix(1);
   }
   while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
      s.remove_suffix(1);
   }
   return s;
}

std::vector<std::string_view> split_fields(std::string_view line)
{
   std::vector<std::string_view> out;
   std::size_t start = 0;
   while (true) {
      const std::size_t comma = line.find(',', start);
      out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
      if (comma == std::string_view::npos) {
         break;
      }
      start = comma + 1;
   }
   return out;
}

} // namespace

Dataset parse_csv(std::string_view text)
{
   std::vector<std::vector<double>> rows;
   Dataset data;
   std::size_t line_no = 0;
   std::size_t pos = 0;
   bool header_seen = false;
   while (pos <= text.size()) {
      const std::size_t nl = text.find('\n', pos);
      std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
      ++line_no;
      if (trim(line).empty()) {
         continue;
      }
      const auto fields = split_fields(line);
      if (!header_seen) {
         header_seen = true;
         if (fields.size() < 2) {
            fail(ErrorCode::parse_error, "line " + std::to_string(line_no) +
                                            ": header needs at least one input and one output column");
         }
         for (auto f : fields) {
            data.columns.emplace_back(f);
         }
         continue;
      }
      if (fields.size() != data.columns.size()) {
         fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": expected " +
                                         std::to_string(data.columns.size()) + " fields, found " +
                                         std::to_string(fields.size()));
      }
      std::vector<double> values(fields.size());
      for (std::size_t c = 0; c < fields.size(); ++c) {
         const auto f = fields[c];
         double v = 0.0;
         const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
         if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
            fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                                            ": '" + std::string(f) + "' is not a finite number");
         }
         values[c] = v;
      }
      rows.push_back(std::move(values));
   }
   if (!header_seen) {
      fail(ErrorCode::parse_error, "line 1: missing header row");
   }
   if (rows.empty()) {
      fail(ErrorCode::parse_error, "dataset has a header but no data rows");
   }
   const auto n = static_cast<Eigen::Index>(rows.size());
   const auto d = static_cast<Eigen::Index>(data.columns.size() - 1);
   data.inputs.resize(n, d);
   data.targets.resize(n);
   for (Eigen::Index k = 0; k < n; ++k) {
      const auto& r = rows[static_cast<std::size_t>(k)];
      for (Eigen::Index j = 0; j < d; ++j) {
         data.inputs(k, j) = r[static_cast<std::size_t>(j)];
      }
      data.targets[k] = r.back();
   }
   return data;
}

std::string read_file(const std::string& path)
{
   std::ifstream in(path, std::ios::binary);
   if (!in) {
      fail(ErrorCode::io_error, "cannot open '" + path + "' for reading");
   }
   std::ostringstream ss;
   ss << in.rdbuf();
   return ss.str();
}

void write_file(const std::string& path, std::string_view contents)
{
   std::ofstream out(path, std::ios::binary | std::ios::trunc);
   if (!out) {
      fail(ErrorCode::io_error, "cannot open '" + path + "' for writing");
   }
   out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
   if (!out) {
      fail(ErrorCode::io_error, "failed writing '" + path + "'");
   }
}

Dataset load_csv(const std::string& path)
{
   try {
      return parse_csv(read_file(path));
   } catch (const Error& e) {
      if (e.code() == ErrorCode::parse_error) {
         fail(ErrorCode::parse_error, path + ": " + e.what());
      }
      throw;
   }
}

std::string to_csv(const Dataset& data)
{
   std::ostringstream os;
   os.precision(17);
   for (std::size_t c = 0; c < data.columns.size(); ++c) {
      os << (c ? "," : "") << data.columns[c];
   }
   os << '\n';
   for (Eigen::Index k = 0; k < data.inputs.rows(); ++k) {
      for (Eigen::Index j = 0; j < data.inputs.cols(); ++j) {
         os << data.inputs(k, j) << ',';
      }
      os << data.targets[k] << '\n';
   }
   return os.str();
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const
{
   Dataset out;
   out.columns = columns;
   out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
   out.targets.resize(static_cast<Eigen::Index>(rows.size()));
   for (std::size_t i = 0; i < rows.size(); ++i) {
      require(rows[i] < size(), "dataset row index out of range");
      out.inputs.row(static_cast<Eigen::Index>(i)) = inputs.row(static_cast<Eigen::Index>(rows[i]));
      out.targets[static_cast<Eigen::Index>(i)] = targets[static_cast<Eigen::Index>(rows[i])];
   }
   return out;
}

std::vector<double> Dataset::point(std::size_t row) const
{
   std::vector<double> x(static_cast<std::size_t>(inputs.cols()));
   for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] = inputs(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j));
   }
   return x;
}

std::vector<InputRange> observed_ranges(const Dataset& data)
{
   std::vector<InputRange> ranges(static_cast<std::size_t>(data.input_dim()));
   for (Eigen::Index j = 0; j < data.inputs.cols(); ++j) {
      const double lo = data.inputs.col(j).minCoeff();
      const double hi = data.inputs.col(j).maxCoeff();
      ranges[static_cast<std::size_t>(j)] = lo < hi ? InputRange{lo, hi} : InputRange{lo - 0.5, lo + 0.5};
   }
   return ranges;
}

double to_unit(double raw, const InputRange& r)
{
   return (raw - r.min) / (r.max - r.min);
}

double from_unit(double unit, const InputRange& r)
{
   return r.min + unit * (r.max - r.min);
}

Dataset scale_to_unit(const Dataset& data, std::span<const InputRange> ranges)
{
   require(ranges.size() == static_cast<std::size_t>(data.input_dim()), "one input range per column required");
   Dataset out = data;
   for (Eigen::Index j = 0; j < data.inputs.cols(); ++j) {
      const auto& r = ranges[static_cast<std::size_t>(j)];
      require(r.min < r.max, "input ranges must be non-degenerate");
      for (Eigen::Index k = 0; k < data.inputs.rows(); ++k) {
         out.inputs(k, j) = to_unit(data.inputs(k, j), r);
      }
   }
   return out;
}

} // namespace shapefit
