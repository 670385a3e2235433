#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skelot/transport.hpp"

namespace skelot {

/// CSV assembly with byte-stable float formatting (17 significant digits)
/// and '#'-prefixed header metadata lines.
class Csv {
 public:
  void meta(const std::string& key, const std::string& value);
  void header(const std::vector<std::string>& cols);
  void row(const std::vector<std::string>& cells);
  std::string str() const;

  static std::string num(double x) { return fmt17(x); }

 private:
  std::vector<std::pair<std::string, std::string>> meta_;
  std::string body_;
};

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

/// Cell picture for 1-D and 2-D skeletons; deterministic output.
std::string cells_svg(const LaguerreDecomposition& cells, const Skeleton& sk);

std::string dump_json(const nlohmann::json& doc);

}  // namespace skelot
