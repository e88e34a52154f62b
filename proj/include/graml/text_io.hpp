#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace graml::text_io {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view token);
long long parse_int(std::string_view token);

// Whitespace-delimited token reader for the checkpoint formats.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string next();
  void expect(std::string_view keyword);
  double next_double() { return parse_double(next()); }
  long long next_int() { return parse_int(next()); }
  std::vector<double> next_doubles(std::size_t n);

 private:
  std::istream& in_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace graml::text_io
