#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "triblock/compare.hpp"
#include "triblock/geometry.hpp"
#include "triblock/partition.hpp"
#include "triblock/phasefield.hpp"
#include "triblock/placement.hpp"

namespace triblock {

using Json = nlohmann::json;

/// Non-finite numbers become null.
Json number(double v);

Json to_json(const MassPair& m);
Json to_json(const GammaMatrix& g);
Json geometry_json(const MassPair& m);
Json to_json(const Configuration& c);
Json to_json(const Thresholds& t);
Json to_json(const RegimeReport& r);
Json to_json(const Layout& l);
Json to_json(const F0Result& f);
Json to_json(const EnergyParts& e);
Json to_json(const Components& c);

MassPair mass_pair_from_json(const Json& j);
Configuration configuration_from_json(const Json& j);
Layout layout_from_json(const Json& j);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

/// Writes text exactly as given; throws io errors.
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// Minimal CSV builder: fixed header, rows of preformatted cells.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header);
  void row(const std::vector<std::string>& cells);
  std::string str() const { return out_; }

 private:
  std::size_t width_;
  std::string out_;
};

/// Shortest round-trip decimal form of v ("inf", "-inf", "nan" for non-finite values).
std::string fmt(double v);

/// Energy trace as CSV: step,total,perimeter_proxy,well,nonlocal,mass1,mass2,config_hash.
std::string trace_csv(const std::vector<TraceRow>& trace, const std::string& config_hash);

}  // namespace triblock
