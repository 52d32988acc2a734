#pragma once

// JSON mappings for the domain types and the line-delimited verdict store.

#include <iosfwd>
#include <string>
#include <vector>

#include "formscope/model.hpp"
#include "json.hpp"

namespace formscope {

inline constexpr std::string_view kVerdictFormat = "formscope-verdict/1";

void to_json(nlohmann::json& j, const SiteRecord& site);
void from_json(const nlohmann::json& j, SiteRecord& site);
void to_json(nlohmann::json& j, const ParseWarning& warning);
void from_json(const nlohmann::json& j, ParseWarning& warning);
void to_json(nlohmann::json& j, const TrackerInstallation& installation);
void from_json(const nlohmann::json& j, TrackerInstallation& installation);
void to_json(nlohmann::json& j, const PixelConfiguration& config);
void from_json(const nlohmann::json& j, PixelConfiguration& config);
void to_json(nlohmann::json& j, const FdcEvent& event);
void from_json(const nlohmann::json& j, FdcEvent& event);
void to_json(nlohmann::json& j, const ProviderVerdict& verdict);
void from_json(const nlohmann::json& j, ProviderVerdict& verdict);
void to_json(nlohmann::json& j, const SiteVerdict& verdict);
void from_json(const nlohmann::json& j, SiteVerdict& verdict);

nlohmann::json to_json(const PiiFieldSet& fields);
PiiFieldSet pii_fields_from_json(const nlohmann::json& j);

// One record per line, sorted by domain. Output is byte-stable.
std::string serialize_verdicts(const std::vector<SiteVerdict>& verdicts);
void write_verdicts(const std::string& path,
                    const std::vector<SiteVerdict>& verdicts);
std::vector<SiteVerdict> parse_verdicts(std::istream& in);
std::vector<SiteVerdict> read_verdicts(const std::string& path);

// Reads a whole file into memory; throws Error when it cannot be opened.
std::string read_file(const std::string& path);

}  // namespace formscope
