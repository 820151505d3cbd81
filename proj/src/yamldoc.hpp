#pragma once

// Strict reading helpers over yaml-cpp: position-annotated errors and
// unknown-key rejection.

#include "vre/error.hpp"

#include <set>
#include <string>
#include <string_view>
#include <yaml-cpp/yaml.h>

namespace vre::detail {

YAML::Node load_document(std::string_view text);

std::string where(const YAML::Node& node);

class MapReader {
   public:
   MapReader(const YAML::Node& node, std::string path);

   bool has(const std::string& key) const;
   YAML::Node child(const std::string& key);

   template <typename T>
   T get(const std::string& key, const T& fallback) {
      seen_.insert(key);
      auto n = node_[key];
      if (!n) return fallback;
      return convert<T>(n, key);
   }

   template <typename T>
   T required(const std::string& key) {
      seen_.insert(key);
      auto n = node_[key];
      if (!n) throw ValidationError("missing key '" + qualified(key) + "'");
      return convert<T>(n, key);
   }

   /// Throws on any key that was never asked for.
   void finish() const;

   private:
   template <typename T>
   T convert(const YAML::Node& n, const std::string& key) const {
      if (!n.IsScalar()) throw ValidationError("key '" + qualified(key) + "' must be a scalar " + where(n));
      try {
         return n.as<T>();
      } catch (const YAML::Exception&) {
         throw ValidationError("key '" + qualified(key) + "' has invalid value '" + n.Scalar() + "' " + where(n));
      }
   }
   std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

   const YAML::Node node_;
   std::string path_;
   std::set<std::string> seen_;
};

}
