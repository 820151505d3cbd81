#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace vre {

/// IPv4 address held in host byte order.
class Ipv4 {
   public:
   constexpr Ipv4() = default;
   constexpr explicit Ipv4(std::uint32_t value) : value_(value) {}
   static constexpr Ipv4 from_octets(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
      return Ipv4((std::uint32_t(a) << 24) | (std::uint32_t(b) << 16) | (std::uint32_t(c) << 8) | std::uint32_t(d));
   }
   /// Strict dotted-quad parse: four decimal labels 0-255, nothing else.
   static std::optional<Ipv4> parse(std::string_view text);

   constexpr std::uint32_t value() const { return value_; }
   constexpr std::uint8_t octet(int i) const { return std::uint8_t(value_ >> (8 * (3 - i))); }
   std::string str() const;

   friend constexpr auto operator<=>(Ipv4, Ipv4) = default;

   private:
   std::uint32_t value_ = 0;
};

/// Parses one dotted-quad label (1-3 decimal digits, value <= 255).
std::optional<std::uint8_t> parse_octet(std::string_view label);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// Virtual time grid: durations are snapped to multiples of 2^-20 s so that
/// sums of event times are exact and independent of summation order.
double quantize_time(double seconds);

/// FNV-1a 64-bit digest, rendered as 16 lowercase hex digits.
std::string digest_hex(std::string_view data);

std::vector<std::string> split(std::string_view text, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Parses "1,2,4" style lists.
std::vector<int> parse_int_list(std::string_view text);

/// Node/resource name `<role>-<3-digit index>`.
std::string indexed_name(std::string_view prefix, int index);

/// Seed derivation for independent per-trial streams.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

/// Uniform double in [0,1) from one 64-bit draw (top 53 bits).
double unit_interval(std::uint64_t bits);

//---------------------------------------------------------------------------
/// Minimal ordered tree used for byte-stable structured-text rendering.
/// Maps render with sorted keys; sequences keep order.
struct TextNode {
   using Map = std::map<std::string, TextNode>;
   using Seq = std::vector<TextNode>;
   std::variant<std::string, Map, Seq> value;

   TextNode() : value(Map{}) {}
   TextNode(std::string scalar) : value(std::move(scalar)) {}
   TextNode(const char* scalar) : value(std::string(scalar)) {}
   static TextNode seq() {
      TextNode n;
      n.value = Seq{};
      return n;
   }
   static TextNode number(double v) { return TextNode(format_double(v)); }
   static TextNode integer(std::int64_t v) { return TextNode(std::to_string(v)); }
   static TextNode boolean(bool v) { return TextNode(v ? "true" : "false"); }

   TextNode& operator[](const std::string& key) { return std::get<Map>(value)[key]; }
   void push(TextNode n) { std::get<Seq>(value).push_back(std::move(n)); }
};

/// Renders a TextNode as a block-style YAML document (LF line endings).
std::string render_text(const TextNode& root);

}
