#pragma once

// Scores detection over the frozen capture fixtures. Shared by the unit
// tests and the acceptance binary.

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "formscope/capture.hpp"
#include "formscope/detect.hpp"
#include "formscope/json_io.hpp"
#include "json.hpp"

namespace formscope::testing {

struct Score {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision() const { return tp + fp == 0 ? 1.0 : double(tp) / double(tp + fp); }
  double recall() const { return tp + fn == 0 ? 1.0 : double(tp) / double(tp + fn); }
};

struct FixtureScores {
  std::size_t fixtures = 0;
  std::map<std::string, Score> by_dimension;  // installation, fdc, mode, field
  std::vector<std::string> mismatches;
};

using Item = std::string;

inline void tally(const std::string& dim, const std::string& fixture, const std::set<Item>& want,
                  const std::set<Item>& got, FixtureScores& out) {
  Score& s = out.by_dimension[dim];
  for (const auto& w : want) {
    if (got.count(w)) {
      ++s.tp;
    } else {
      ++s.fn;
      out.mismatches.push_back(fixture + ": missing " + dim + " " + w);
    }
  }
  for (const auto& g : got) {
    if (!want.count(g)) {
      ++s.fp;
      out.mismatches.push_back(fixture + ": unexpected " + dim + " " + g);
    }
  }
}

inline FixtureScores score_fixtures(const std::filesystem::path& dir) {
  using nlohmann::json;
  const json manifest = json::parse(read_file((dir / "expected.json").string()));
  const auto identity = default_identity();
  const auto rules = DetectionRules::defaults();
  FixtureScores out;
  for (const json& fx : manifest.at("fixtures")) {
    const std::string name = fx.at("name");
    VisitCapture capture = load_capture((dir / "captures" / fx.at("file").get<std::string>()).string());
    SiteVerdict v = analyze_visit(capture, identity, rules);
    ++out.fixtures;
    std::set<Item> want[4], got[4];
    for (Provider p : kAllProviders) {
      const std::string pn(to_string(p));
      const json& e = fx.at("expected").at(pn);
      const ProviderVerdict& pv = v.of(p);
      for (const json& inst : e.at("installations")) {
        want[0].insert(inst[0].get<std::string>() + "/" + inst[1].get<std::string>() + "/" +
                       inst[2].get<std::string>() + (inst[3].get<bool>() ? "/first_party" : ""));
      }
      for (const auto& inst : pv.installations) {
        got[0].insert(pn + "/" + inst.tracker_id + "/" + std::string(to_string(inst.tag_kind)) +
                      (inst.first_party_mode ? "/first_party" : ""));
      }
      if (e.at("fdc").get<bool>()) want[1].insert(pn);
      if (pv.fdc) got[1].insert(pn);
      for (const json& m : e.at("modes")) want[2].insert(pn + "/" + m.get<std::string>());
      for (auto m : pv.fdc_modes) got[2].insert(pn + "/" + std::string(to_string(m)));
      for (const json& f : e.at("fdc_fields")) want[3].insert(pn + "/fdc/" + f.get<std::string>());
      for (auto f : pv.fdc_fields) got[3].insert(pn + "/fdc/" + std::string(to_string(f)));
      for (const json& f : e.at("config_fields")) want[3].insert(pn + "/config/" + f.get<std::string>());
      for (auto f : pv.config_fields) got[3].insert(pn + "/config/" + std::string(to_string(f)));
      if (e.at("configured").get<bool>()) want[1].insert(pn + "/configured");
      if (pv.configured) got[1].insert(pn + "/configured");
    }
    static const char* kDims[] = {"installation", "fdc", "mode", "field"};
    for (int d = 0; d < 4; ++d) tally(kDims[d], name, want[d], got[d], out);
  }
  return out;
}

}  // namespace formscope::testing
