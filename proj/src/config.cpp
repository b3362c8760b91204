#include "chromacode/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>

namespace chromacode {
namespace {

std::vector<std::string> split_key(const std::string& key) {
  std::vector<std::string> parts;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ConfigError("malformed config key '" + key + "'");
    parts.push_back(part);
  }
  if (parts.empty()) throw ConfigError("empty config key");
  return parts;
}

bool is_index(const std::string& s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
}

}  // namespace

struct Config::Impl {
  YAML::Node root{YAML::NodeType::Map};

  std::optional<YAML::Node> find(const std::string& key) const {
    YAML::Node cur = YAML::Clone(root);
    for (const auto& part : split_key(key)) {
      if (cur.IsMap()) {
        YAML::Node next = cur[part];
        if (!next) return std::nullopt;
        cur.reset(next);
      } else if (cur.IsSequence() && is_index(part)) {
        const std::size_t idx = std::stoul(part);
        if (idx >= cur.size()) return std::nullopt;
        YAML::Node next = cur[idx];
        cur.reset(next);
      } else {
        return std::nullopt;
      }
    }
    return cur;
  }

  template <class T>
  T scalar(const std::string& key, T fallback) const {
    auto node = find(key);
    if (!node || node->IsNull()) return fallback;
    try {
      return node->as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("config key '" + key + "' has the wrong type");
    }
  }

  template <class T>
  std::vector<T> list(const std::string& key, const std::vector<T>& fallback) const {
    auto node = find(key);
    if (!node || node->IsNull()) return fallback;
    try {
      if (node->IsScalar()) return {node->as<T>()};
      return node->as<std::vector<T>>();
    } catch (const YAML::Exception&) {
      throw ConfigError("config key '" + key + "' must be a list");
    }
  }
};

Config::Config() : impl_(std::make_unique<Impl>()) {}
Config::~Config() = default;
Config::Config(const Config& other) : impl_(std::make_unique<Impl>()) {
  impl_->root = YAML::Clone(other.impl_->root);
}
Config& Config::operator=(const Config& other) {
  if (this != &other) impl_->root = YAML::Clone(other.impl_->root);
  return *this;
}
Config::Config(Config&&) noexcept = default;
Config& Config::operator=(Config&&) noexcept = default;

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Config Config::parse(const std::string& text) {
  Config c;
  try {
    YAML::Node node = YAML::Load(text);
    if (node.IsNull()) return c;
    if (!node.IsMap()) throw ConfigError("config root must be a mapping");
    c.impl_->root = node;
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return c;
}

void Config::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like key=value: '" + assignment + "'");
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void Config::set(const std::string& key, const std::string& value_yaml) {
  YAML::Node value;
  try {
    value = YAML::Load(value_yaml);
  } catch (const YAML::Exception& e) {
    throw ConfigError("cannot parse override value for '" + key + "': " + e.what());
  }
  const auto parts = split_key(key);
  YAML::Node cur = impl_->root;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!cur.IsMap() && !cur.IsNull()) throw ConfigError("cannot descend into '" + parts[i] + "'");
    YAML::Node next = cur[parts[i]];
    if (!next.IsMap()) next = YAML::Node(YAML::NodeType::Map);
    cur.reset(next);
  }
  cur[parts.back()] = value;
}

bool Config::has(const std::string& key) const {
  auto node = impl_->find(key);
  return node && !node->IsNull();
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return impl_->scalar<std::string>(key, fallback);
}
double Config::get_double(const std::string& key, double fallback) const {
  return impl_->scalar<double>(key, fallback);
}
int Config::get_int(const std::string& key, int fallback) const { return impl_->scalar<int>(key, fallback); }
std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  return impl_->scalar<std::uint64_t>(key, fallback);
}
bool Config::get_bool(const std::string& key, bool fallback) const {
  return impl_->scalar<bool>(key, fallback);
}
std::vector<int> Config::get_ints(const std::string& key, const std::vector<int>& fallback) const {
  return impl_->list<int>(key, fallback);
}
std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  return impl_->list<double>(key, fallback);
}

std::vector<Config> Config::get_list(const std::string& key) const {
  std::vector<Config> out;
  auto node = impl_->find(key);
  if (!node || node->IsNull()) return out;
  if (!node->IsSequence()) throw ConfigError("config key '" + key + "' must be a list");
  for (const auto& item : *node) {
    if (!item.IsMap()) throw ConfigError("elements of '" + key + "' must be mappings");
    Config c;
    c.impl_->root = YAML::Clone(item);
    out.push_back(std::move(c));
  }
  return out;
}

std::string Config::dump() const {
  YAML::Emitter out;
  out << impl_->root;
  return std::string(out.c_str()) + "\n";
}

}  // namespace chromacode
