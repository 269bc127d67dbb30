#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace ksnh {

// SHA-1 of "blob <size>\0<bytes>", as git computes object ids.
std::string git_blob_sha1(const std::string& bytes);

std::string read_file(const std::string& path);

struct Check {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string comparison;  // how value relates to tolerance when passing: "<", "<=", ">", ">="
    std::string note;
};

struct RunReport {
    std::string command;
    std::string model;
    std::vector<std::pair<std::string, std::string>> inputs;  // label, blob hash
    std::vector<Check> checks;
    nlohmann::ordered_json details = nlohmann::ordered_json::object();
    std::vector<std::pair<std::string, double>> timings;  // emitted only when requested

    void add_input(const std::string& label, const std::string& bytes);
    Check& add(std::string name, bool pass, double value, double tolerance, std::string comparison,
               std::string note = {});
    bool passed() const;
    // Hash over the input hashes in order.
    std::string input_hash() const;
    nlohmann::ordered_json to_json(bool with_timings) const;
    std::string checks_csv() const;
};

}  // namespace ksnh
