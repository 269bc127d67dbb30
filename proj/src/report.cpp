#include "ksnh/report.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ksnh/errors.hpp"

namespace ksnh {

std::string git_blob_sha1(const std::string& bytes) {
    const std::string blob = "blob " + std::to_string(bytes.size()) + '\0' + bytes;
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1)
        throw Error("SHA-1 digest failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        const unsigned char c = digest[i];
        std::snprintf(buf, sizeof buf, "%02x", c);
        hex += buf;
    }
    return hex;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path + "'");
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

void RunReport::add_input(const std::string& label, const std::string& bytes) {
    inputs.emplace_back(label, git_blob_sha1(bytes));
}

Check& RunReport::add(std::string name, bool pass, double value, double tolerance, std::string comparison,
                      std::string note) {
    checks.push_back({std::move(name), pass, value, tolerance, std::move(comparison), std::move(note)});
    return checks.back();
}

bool RunReport::passed() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

std::string RunReport::input_hash() const {
    std::string joined;
    for (const auto& [label, hash] : inputs) joined += hash + ' ' + label + '\n';
    return git_blob_sha1(joined);
}

nlohmann::ordered_json RunReport::to_json(bool with_timings) const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["model"] = model;
    j["input_hash"] = input_hash();
    auto& in = j["inputs"] = nlohmann::ordered_json::array();
    for (const auto& [label, hash] : inputs) in.push_back({{"input", label}, {"sha1", hash}});
    j["pass"] = passed();
    auto& cs = j["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : checks) {
        nlohmann::ordered_json e;
        e["name"] = c.name;
        e["pass"] = c.pass;
        e["value"] = c.value;
        e["tolerance"] = c.tolerance;
        e["comparison"] = c.comparison;
        if (!c.note.empty()) e["note"] = c.note;
        cs.push_back(std::move(e));
    }
    if (!details.empty()) j["details"] = details;
    if (with_timings) {
        auto& t = j["timings"] = nlohmann::ordered_json::object();
        for (const auto& [name, ms] : timings) t[name] = ms;
    }
    return j;
}

std::string RunReport::checks_csv() const {
    std::string out = "check,pass,value,tolerance,comparison\n";
    char buf[96];
    for (const auto& c : checks) {
        std::snprintf(buf, sizeof buf, ",%s,%.17g,%.17g,", c.pass ? "true" : "false", c.value, c.tolerance);
        out += c.name + buf + c.comparison + '\n';
    }
    return out;
}

}  // namespace ksnh
