#include "vre/util.hpp"

#include "vre/error.hpp"

#include <charconv>
#include <cmath>
#include <fmt/format.h>

namespace vre {

std::optional<std::uint8_t> parse_octet(std::string_view label) {
   if (label.empty() || label.size() > 3) return std::nullopt;
   unsigned value = 0;
   for (char c : label) {
      if (c < '0' || c > '9') return std::nullopt;
      value = value * 10 + unsigned(c - '0');
   }
   if (value > 255) return std::nullopt;
   return std::uint8_t(value);
}

std::optional<Ipv4> Ipv4::parse(std::string_view text) {
   auto parts = split(text, '.');
   if (parts.size() != 4) return std::nullopt;
   std::uint32_t value = 0;
   for (const auto& p : parts) {
      auto octet = parse_octet(p);
      if (!octet) return std::nullopt;
      value = (value << 8) | *octet;
   }
   return Ipv4(value);
}

std::string Ipv4::str() const {
   return fmt::format("{}.{}.{}.{}", octet(0), octet(1), octet(2), octet(3));
}

std::string format_double(double v) {
   char buf[64];
   auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
   std::string out(buf, end);
   // keep a decimal point so the value reads back as floating point
   if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
   return out;
}

double quantize_time(double seconds) {
   return std::ldexp(std::round(std::ldexp(seconds, 20)), -20);
}

std::string digest_hex(std::string_view data) {
   std::uint64_t h = 0xcbf29ce484222325ull;
   for (unsigned char c : data) {
      h ^= c;
      h *= 0x100000001b3ull;
   }
   return fmt::format("{:016x}", h);
}

std::vector<std::string> split(std::string_view text, char sep) {
   std::vector<std::string> out;
   std::size_t start = 0;
   while (true) {
      auto pos = text.find(sep, start);
      out.emplace_back(text.substr(start, pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
   }
   return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
   std::string out;
   for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) out += sep;
      out += parts[i];
   }
   return out;
}

std::vector<int> parse_int_list(std::string_view text) {
   std::vector<int> out;
   for (const auto& item : split(text, ',')) {
      int v = 0;
      auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || ptr != item.data() + item.size())
         throw ValidationError("not an integer list: '" + std::string(text) + "'");
      out.push_back(v);
   }
   return out;
}

std::string indexed_name(std::string_view prefix, int index) {
   return fmt::format("{}-{:03d}", prefix, index);
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
   // splitmix64 finalizer folded over the inputs
   auto step = [](std::uint64_t x) {
      x += 0x9e3779b97f4a7c15ull;
      x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
      x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
      return x ^ (x >> 31);
   };
   std::uint64_t h = step(base);
   h = step(h ^ a);
   h = step(h ^ b);
   h = step(h ^ c);
   return h;
}

double unit_interval(std::uint64_t bits) {
   return double(bits >> 11) * 0x1p-53;
}

//---------------------------------------------------------------------------
namespace {
//---------------------------------------------------------------------------
bool plain_scalar(const std::string& s) {
   if (s.empty()) return false;
   for (char c : s) {
      bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '_' ||
         c == '-' || c == '/' || c == '+';
      if (!ok) return false;
   }
   return s.front() != '-' || s.size() > 1;
}
//---------------------------------------------------------------------------
std::string scalar_text(const std::string& s) {
   if (plain_scalar(s)) return s;
   std::string out = "\"";
   for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
   }
   return out + "\"";
}
//---------------------------------------------------------------------------
bool is_empty_collection(const TextNode& n) {
   if (auto m = std::get_if<TextNode::Map>(&n.value)) return m->empty();
   if (auto s = std::get_if<TextNode::Seq>(&n.value)) return s->empty();
   return false;
}
//---------------------------------------------------------------------------
std::string inline_text(const TextNode& n) {
   if (auto s = std::get_if<std::string>(&n.value)) return scalar_text(*s);
   return std::holds_alternative<TextNode::Map>(n.value) ? "{}" : "[]";
}
//---------------------------------------------------------------------------
void emit(const TextNode& node, int indent, std::string& out);
//---------------------------------------------------------------------------
void emit_entry(const std::string& key, const TextNode& child, int indent, std::string& out) {
   out.append(std::size_t(indent), ' ');
   out += scalar_text(key) + ":";
   if (std::holds_alternative<std::string>(child.value) || is_empty_collection(child)) {
      out += " " + inline_text(child) + "\n";
   } else {
      out += "\n";
      emit(child, indent + 2, out);
   }
}
//---------------------------------------------------------------------------
void emit(const TextNode& node, int indent, std::string& out) {
   if (auto m = std::get_if<TextNode::Map>(&node.value)) {
      for (const auto& [k, v] : *m) emit_entry(k, v, indent, out);
   } else if (auto s = std::get_if<TextNode::Seq>(&node.value)) {
      for (const auto& item : *s) {
         out.append(std::size_t(indent), ' ');
         if (auto im = std::get_if<TextNode::Map>(&item.value); im && !im->empty()) {
            // first entry shares the dash line
            std::string body;
            emit(item, indent + 2, body);
            out += "- " + body.substr(std::size_t(indent) + 2);
         } else if (std::holds_alternative<TextNode::Seq>(item.value) && !is_empty_collection(item)) {
            out += "-\n";
            emit(item, indent + 2, out);
         } else {
            out += "- " + inline_text(item) + "\n";
         }
      }
   } else {
      out.append(std::size_t(indent), ' ');
      out += inline_text(node) + "\n";
   }
}
//---------------------------------------------------------------------------
}
//---------------------------------------------------------------------------
std::string render_text(const TextNode& root) {
   std::string out;
   emit(root, 0, out);
   return out;
}

}
