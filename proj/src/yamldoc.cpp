#include "yamldoc.hpp"

namespace vre::detail {

YAML::Node load_document(std::string_view text) {
   try {
      auto root = YAML::Load(std::string(text));
      if (root.IsNull()) return YAML::Node(YAML::NodeType::Map);
      if (!root.IsMap()) throw SyntaxError("document root must be a mapping", root.Mark().line + 1, root.Mark().column + 1);
      return root;
   } catch (const YAML::ParserException& e) {
      throw SyntaxError(e.msg, e.mark.line + 1, e.mark.column + 1);
   }
}

std::string where(const YAML::Node& node) {
   auto mark = node.Mark();
   if (mark.is_null()) return {};
   return "(line " + std::to_string(mark.line + 1) + ")";
}

MapReader::MapReader(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
   if (!node_.IsMap()) throw ValidationError("'" + path_ + "' must be a mapping " + where(node_));
}

bool MapReader::has(const std::string& key) const {
   return bool(node_[key]);
}

YAML::Node MapReader::child(const std::string& key) {
   seen_.insert(key);
   return node_[key];
}

void MapReader::finish() const {
   for (auto it = node_.begin(); it != node_.end(); ++it) {
      auto key = it->first.as<std::string>();
      if (!seen_.count(key)) throw ValidationError("unknown key '" + qualified(key) + "' " + where(it->first));
   }
}

}
