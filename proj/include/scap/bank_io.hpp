#pragma once

// Filter bank <-> JSON. Doubles are written in shortest round-trip form, so
// export followed by import reproduces every tap bit for bit.

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "scap/error.hpp"
#include "scap/filters.hpp"

namespace scap {

inline constexpr int filter_bank_schema_version = 1;

inline nlohmann::json to_json(const FilterBank& bank)
{
    nlohmann::json j;
    j["schema_version"] = filter_bank_schema_version;
    j["kind"] = to_string(bank.kind);
    j["spec"] = {
        {"beta", bank.spec.beta},
        {"symbol_period_s", bank.spec.symbol_period},
        {"chi", bank.spec.chi},
        {"span", bank.spec.span},
        {"samples_per_symbol", bank.spec.samples_per_symbol()},
    };
    j["norm_mode"] = to_string(bank.norm_mode);
    j["b_sub_hz"] = bank.b_sub_hz;
    if (bank.kind == BankKind::scap) {
        j["carriers_hz"] = {{"fc1", bank.fc1()}, {"fc2", bank.fc2()}, {"fc3", bank.fc3()}};
    }
    auto& branches = j["branches"] = nlohmann::json::array();
    for (std::size_t b = 0; b < bank.branch_count(); ++b) {
        branches.push_back({
            {"name", bank.names[b]},
            {"carrier_hz", bank.carrier_hz[b]},
            {"stagger_half_symbols", bank.stagger[b]},
            {"taps", bank.taps[b]},
            {"raw_taps", bank.raw_taps[b]},
        });
    }
    return j;
}

inline BankKind bank_kind_from_string(const std::string& s)
{
    if (s == "scap") return BankKind::scap;
    if (s == "mcap") return BankKind::mcap;
    if (s == "ook") return BankKind::ook;
    throw config_error("unknown filter bank kind: " + s);
}

inline NormMode norm_mode_from_string(const std::string& s)
{
    if (s == "unit-energy") return NormMode::unit_energy;
    if (s == "peak-unity") return NormMode::peak_unity;
    throw config_error("unknown norm mode: " + s);
}

inline FilterBank bank_from_json(const nlohmann::json& j)
{
    try {
        detail::require(j.at("schema_version").get<int>() == filter_bank_schema_version,
                        "unsupported filter bank schema_version");
        FilterBank bank;
        bank.kind = bank_kind_from_string(j.at("kind").get<std::string>());
        const auto& s = j.at("spec");
        bank.spec.beta = s.at("beta").get<double>();
        bank.spec.symbol_period = s.at("symbol_period_s").get<double>();
        bank.spec.chi = s.at("chi").get<int>();
        bank.spec.span = s.at("span").get<int>();
        bank.spec.validate();
        bank.norm_mode = norm_mode_from_string(j.at("norm_mode").get<std::string>());
        bank.b_sub_hz = j.at("b_sub_hz").get<double>();
        for (const auto& br : j.at("branches")) {
            bank.names.push_back(br.at("name").get<std::string>());
            bank.carrier_hz.push_back(br.at("carrier_hz").get<double>());
            bank.stagger.push_back(br.at("stagger_half_symbols").get<int>());
            bank.taps.push_back(br.at("taps").get<std::vector<double>>());
            bank.raw_taps.push_back(br.at("raw_taps").get<std::vector<double>>());
        }
        detail::require(!bank.taps.empty(), "filter bank has no branches");
        for (const auto& t : bank.taps) {
            detail::require(t.size() == bank.spec.tap_count(), "tap array length does not match spec");
        }
        return bank;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("malformed filter bank document: ") + e.what());
    }
}

inline void save_bank(const FilterBank& bank, const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw runtime_failure("cannot open " + path + " for writing");
    }
    out << to_json(bank).dump(2) << '\n';
}

inline FilterBank load_bank(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw config_error("cannot open " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(path + ": " + e.what());
    }
    return bank_from_json(j);
}

} // namespace scap
