#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gdelt/featurize.hpp"
#include "gdelt/parser.hpp"

namespace gdelt {

// FeatureSource over parsed event records. Variable names follow the event
// table's column spellings; QuadClass surfaces as its display name, IsRootEvent
// as true/false, and mainURL as the host extracted from the source URL.
class EventTableSource {
  using NominalFn = std::optional<std::string> (*)(const EventRecord&);
  using NumericFn = std::optional<double> (*)(const EventRecord&);

 public:
  explicit EventTableSource(std::span<const EventRecord> records) : records_(records) {}

  std::size_t row_count() const { return records_.size(); }

  std::optional<Date> time_value(std::size_t i) const { return records_[i].sql_date; }

  bool has_nominal(std::string_view var) const {
    return nominal_registry().count(std::string(var)) > 0;
  }
  bool has_numeric(std::string_view var) const {
    return numeric_registry().count(std::string(var)) > 0;
  }

  std::optional<std::string> nominal_value(std::string_view var, std::size_t i) const {
    const auto it = nominal_registry().find(std::string(var));
    if (it == nominal_registry().end()) return std::nullopt;
    return it->second(records_[i]);
  }

  std::optional<double> numeric_value(std::string_view var, std::size_t i) const {
    const auto it = numeric_registry().find(std::string(var));
    if (it == numeric_registry().end()) return std::nullopt;
    return it->second(records_[i]);
  }

  static std::vector<std::string> nominal_variables() {
    std::vector<std::string> names;
    for (const auto& [k, v] : nominal_registry()) names.push_back(k);
    return names;
  }
  static std::vector<std::string> numeric_variables() {
    std::vector<std::string> names;
    for (const auto& [k, v] : numeric_registry()) names.push_back(k);
    return names;
  }

 private:
  static const std::map<std::string, NominalFn>& nominal_registry() {
    static const std::map<std::string, NominalFn> reg = [] {
      std::map<std::string, NominalFn> m;
      m["Actor1Name"] = [](const EventRecord& r) { return r.actor1_name; };
      m["Actor2Name"] = [](const EventRecord& r) { return r.actor2_name; };
      m["Actor1CountryCode"] = [](const EventRecord& r) { return r.actor1_country_code; };
      m["Actor2CountryCode"] = [](const EventRecord& r) { return r.actor2_country_code; };
      m["Actor1EthnicCode"] = [](const EventRecord& r) { return r.actor1_ethnic_code; };
      m["Actor2EthnicCode"] = [](const EventRecord& r) { return r.actor2_ethnic_code; };
      m["IsRootEvent"] = [](const EventRecord& r) {
        return std::optional<std::string>(r.is_root_event ? "true" : "false");
      };
      m["EventCode"] = [](const EventRecord& r) { return std::optional<std::string>(r.event_code); };
      m["EventBaseCode"] = [](const EventRecord& r) {
        return std::optional<std::string>(r.event_base_code);
      };
      m["EventRootCode"] = [](const EventRecord& r) {
        return std::optional<std::string>(r.event_root_code);
      };
      m["QuadClass"] = [](const EventRecord& r) {
        return std::optional<std::string>(std::string(quad_class_name(r.quad_class)));
      };
      m["Actor1Geo_CountryCode"] = [](const EventRecord& r) { return r.actor1_geo.country_code; };
      m["Actor2Geo_CountryCode"] = [](const EventRecord& r) { return r.actor2_geo.country_code; };
      m["ActionGeo_CountryCode"] = [](const EventRecord& r) { return r.action_geo.country_code; };
      m["Actor1Geo_Fullname"] = [](const EventRecord& r) { return r.actor1_geo.fullname; };
      m["Actor2Geo_Fullname"] = [](const EventRecord& r) { return r.actor2_geo.fullname; };
      m["ActionGeo_Fullname"] = [](const EventRecord& r) { return r.action_geo.fullname; };
      m["ActionGeo_ADM1Code"] = [](const EventRecord& r) { return r.action_geo.adm1; };
      m["mainURL"] = [](const EventRecord& r) -> std::optional<std::string> {
        if (!r.source_url) return std::nullopt;
        return extract_host(*r.source_url);
      };
      return m;
    }();
    return reg;
  }

  static const std::map<std::string, NumericFn>& numeric_registry() {
    static const std::map<std::string, NumericFn> reg = [] {
      std::map<std::string, NumericFn> m;
      m["GoldsteinScale"] = [](const EventRecord& r) { return r.goldstein_scale; };
      m["AvgTone"] = [](const EventRecord& r) { return r.avg_tone; };
      m["NumMentions"] = +[](const EventRecord& r) -> std::optional<double> {
        if (!r.num_mentions) return std::nullopt;
        return static_cast<double>(*r.num_mentions);
      };
      m["NumSources"] = +[](const EventRecord& r) -> std::optional<double> {
        if (!r.num_sources) return std::nullopt;
        return static_cast<double>(*r.num_sources);
      };
      m["NumArticles"] = +[](const EventRecord& r) -> std::optional<double> {
        if (!r.num_articles) return std::nullopt;
        return static_cast<double>(*r.num_articles);
      };
      m["Actor1Geo_Lat"] = [](const EventRecord& r) { return r.actor1_geo.latitude; };
      m["Actor1Geo_Long"] = [](const EventRecord& r) { return r.actor1_geo.longitude; };
      m["Actor2Geo_Lat"] = [](const EventRecord& r) { return r.actor2_geo.latitude; };
      m["Actor2Geo_Long"] = [](const EventRecord& r) { return r.actor2_geo.longitude; };
      m["ActionGeo_Lat"] = [](const EventRecord& r) { return r.action_geo.latitude; };
      m["ActionGeo_Long"] = [](const EventRecord& r) { return r.action_geo.longitude; };
      return m;
    }();
    return reg;
  }

  std::span<const EventRecord> records_;
};

}  // namespace gdelt
