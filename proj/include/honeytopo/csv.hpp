#pragma once

#include <array>
#include <charconv>
#include <ostream>
#include <string>
#include <string_view>

namespace honeytopo::csv {

/// Locale-independent %.{digits}g formatting.
inline std::string num(double v, int digits = 12) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, digits);
  if (ec != std::errc{}) return "nan";
  return {buf.data(), end};
}

/// Shortest representation that round-trips exactly.
inline std::string exact(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) return "nan";
  return {buf.data(), end};
}

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  template <typename... Cols>
  void header(Cols... names) {
    bool first = true;
    ((os_ << (first ? "" : ",") << std::string_view(names), first = false), ...);
    os_ << '\n';
  }

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((os_ << (first ? "" : ","), put(fields), first = false), ...);
    os_ << '\n';
  }

 private:
  void put(double v) { os_ << exact(v); }
  void put(const std::string& s) { os_ << s; }
  void put(const char* s) { os_ << s; }
  template <typename Int>
    requires std::is_integral_v<Int>
  void put(Int v) { os_ << v; }

  std::ostream& os_;
};

}  // namespace honeytopo::csv
