#include "graml/text_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "graml/error.hpp"

namespace graml::text_io {

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) fail(ErrorKind::Io, "cannot format number");
  return {buf.data(), end};
}

double parse_double(std::string_view token) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || end != token.data() + token.size()) {
    fail(ErrorKind::Parse, "expected a number, got '" + std::string(token) + "'");
  }
  return v;
}

long long parse_int(std::string_view token) {
  long long v = 0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || end != token.data() + token.size()) {
    fail(ErrorKind::Parse, "expected an integer, got '" + std::string(token) + "'");
  }
  return v;
}

std::string TokenReader::next() {
  std::string tok;
  if (!(in_ >> tok)) fail(ErrorKind::Parse, "unexpected end of input");
  return tok;
}

void TokenReader::expect(std::string_view keyword) {
  const auto tok = next();
  if (tok != keyword) {
    fail(ErrorKind::Parse,
         "expected '" + std::string(keyword) + "', got '" + tok + "'");
  }
}

std::vector<double> TokenReader::next_doubles(std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = next_double();
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace graml::text_io
